import numpy as np
import pytest

from mqpc import _kernels_py, kernels

try:
    from mqpc import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

IMPLS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
KERNEL_FUNCS = ["fourier_state", "shift", "overlap", "probabilities", "sample", "measure_outcome"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(params=IMPLS, ids=lambda m: m.NAME)
def backend(request, monkeypatch):
    """Route every kernel call through one implementation."""
    for name in KERNEL_FUNCS:
        monkeypatch.setattr(kernels, name, getattr(request.param, name))
    return request.param


def fourier_oracle(d, k):
    """F|k> built from numpy's inverse FFT, independent of the package code."""
    e = np.zeros(d, dtype=complex)
    e[k] = 1.0
    return np.fft.ifft(e) * np.sqrt(d)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for the acceptance summary."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}  {detail}")
