"""Single d-level qudit algebra.

Two conjugate bases are supported: the computational basis ``|k>`` and its
discrete-Fourier image ``F|k> = d**-0.5 * sum_j w**(j*k) |j>`` with
``w = exp(2*pi*i/d)``. The cyclic shift ``U_m |r> = |(r + m) mod d>`` permutes
the computational basis and leaves every Fourier state invariant up to the
global phase ``w**(-m*k)``.

All values here are immutable; randomness is always passed in explicitly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels

STATE_TOL = 1e-9
ALGEBRA_TOL = 1e-12


class Basis(enum.Enum):
    COMPUTATIONAL = "computational"
    FOURIER = "fourier"

    @property
    def short(self) -> str:
        return "T1" if self is Basis.COMPUTATIONAL else "T2"


@dataclass(frozen=True)
class BasisState:
    basis: Basis
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"basis index must be non-negative, got {self.index}")


class StateVector:
    """Normalized amplitude vector of one qudit.

    The underlying array is read-only. Construction checks normalization
    to within ``STATE_TOL`` and raises rather than renormalizing.
    """

    __slots__ = ("_amps",)

    def __init__(self, amplitudes, *, _trusted: bool = False):
        amps = np.array(amplitudes, dtype=np.complex128)
        if not _trusted:
            if amps.ndim != 1 or amps.shape[0] < 2:
                raise ValueError("a qudit needs a 1-D amplitude vector of length >= 2")
            norm = float(np.sum(np.abs(amps) ** 2))
            if abs(norm - 1.0) > STATE_TOL:
                raise ValueError(f"state is not normalized (squared norm {norm!r})")
        amps.flags.writeable = False
        self._amps = amps

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def dim(self) -> int:
        return self._amps.shape[0]

    def copy(self) -> "StateVector":
        return StateVector(self._amps.copy(), _trusted=True)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"StateVector(dim={self.dim}, amplitudes={np.round(self._amps, 6).tolist()})"


def _check_norm(amps: np.ndarray) -> None:
    drift = abs(float(np.sum(np.abs(amps) ** 2)) - 1.0)
    if drift > STATE_TOL:
        raise RuntimeError(f"normalization drifted by {drift:.3e}")


def prepare(b: BasisState, d: int) -> StateVector:
    """Return the basis state ``b`` as a d-dimensional vector.

    Raises ValueError for ``d < 2`` or an index outside ``[0, d)``.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not 0 <= b.index < d:
        raise ValueError(f"index {b.index} out of range for d={d}")
    if b.basis is Basis.COMPUTATIONAL:
        amps = np.zeros(d, dtype=np.complex128)
        amps[b.index] = 1.0
    else:
        amps = kernels.fourier_state(d, b.index)
    return StateVector(amps, _trusted=True)


def apply_shift(s: StateVector, m: int) -> StateVector:
    """Cyclic shift: amplitude at position r moves to ``(r + m) mod d``."""
    d = s.dim
    if not 0 <= m < d:
        raise ValueError(f"shift amount {m} out of range for d={d}")
    out = kernels.shift(s.amplitudes, m)
    _check_norm(out)
    return StateVector(out, _trusted=True)


def outcome_probabilities(s: StateVector, basis: Basis) -> np.ndarray:
    return kernels.probabilities(s.amplitudes, basis is Basis.FOURIER)


def measure_in_basis(s: StateVector, basis: Basis, rng: np.random.Generator) -> tuple[int, StateVector]:
    """Born-rule measurement. Returns the outcome and the collapsed state."""
    k = kernels.measure_outcome(s.amplitudes, basis is Basis.FOURIER, rng.random())
    return k, prepare(BasisState(basis, k), s.dim)


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return kernels.overlap(a.amplitudes, b.amplitudes)


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = ALGEBRA_TOL) -> bool:
    return abs(inner(a, b)) >= 1.0 - tol


def global_phase(a: StateVector, b: StateVector, tol: float = ALGEBRA_TOL) -> complex:
    """The unit scalar c with ``a == c * b``.

    Raises ValueError if the states differ by more than a phase.
    """
    ov = inner(b, a)
    if abs(ov) < 1.0 - tol:
        raise ValueError("states are not equal up to a global phase")
    return ov / abs(ov)


def basis_matrix(basis: Basis, d: int) -> np.ndarray:
    """Columns are the basis vectors ``|k>`` or ``F|k>`` for k = 0..d-1."""
    return np.column_stack([prepare(BasisState(basis, k), d).amplitudes for k in range(d)])
