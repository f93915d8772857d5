import ast
import inspect
import math
from pathlib import Path

import numpy as np
import pytest

import mqpc
from mqpc.qudit import Basis, BasisState, equal_up_to_global_phase, prepare
from mqpc.registry import ParticleNotFound, Registry
from mqpc.testing import inspect_for_test

C, F = Basis.COMPUTATIONAL, Basis.FOURIER
PKG = Path(mqpc.__file__).parent


def test_create_and_measure(rng, backend):
    reg = Registry(3)
    a = reg.create_particle(BasisState(C, 0))
    b = reg.create_particle(BasisState(F, 2))
    assert a != b
    assert reg.measure_particle(a, C, rng) == 0
    assert reg.measure_particle(b, F, rng) == 2
    assert len(reg) == 2 and a in reg


def test_ids_never_reused():
    reg = Registry(2)
    ids = [reg.create_particle(BasisState(C, 0)) for _ in range(100)]
    assert len(set(ids)) == 100


def test_create_rejects_index_beyond_dimension():
    with pytest.raises(ValueError):
        Registry(3).create_particle(BasisState(C, 3))
    with pytest.raises(ValueError):
        Registry(1)


def test_shift_examples(rng, backend):
    reg = Registry(3)
    pid = reg.create_particle(BasisState(C, 1))
    reg.shift_particle(pid, 2)
    assert reg.measure_particle(pid, C, rng) == 0
    for m in range(5):
        reg5 = Registry(5)
        f = reg5.create_particle(BasisState(F, 3))
        reg5.shift_particle(f, m)
        assert reg5.measure_particle(f, F, rng) == 3


def test_shift_by_zero_keeps_state():
    reg = Registry(4)
    pid = reg.create_particle(BasisState(F, 1))
    before = inspect_for_test(reg, pid)
    reg.shift_particle(pid, 0)
    np.testing.assert_array_equal(inspect_for_test(reg, pid).amplitudes, before.amplitudes)


def test_unknown_particle(rng):
    reg = Registry(2)
    with pytest.raises(ParticleNotFound):
        reg.shift_particle(99, 1)
    with pytest.raises(ParticleNotFound):
        reg.measure_particle(99, C, rng)
    with pytest.raises(ParticleNotFound):
        inspect_for_test(reg, 99)
    with pytest.raises(KeyError):
        reg.measure_particle(-1, C, rng)


def test_collapse_idempotence(rng, backend):
    reg = Registry(5)
    for _ in range(200):
        pid = reg.create_particle(BasisState(F, int(rng.integers(5))))
        first = reg.measure_particle(pid, C, rng)
        assert reg.measure_particle(pid, C, rng) == first
        again = reg.measure_particle(pid, F, rng)
        assert reg.measure_particle(pid, F, rng) == again


def test_measure_in_wrong_basis_randomizes(rng, backend):
    # |<F_k|j>|^2 = 1/d, so after a computational measurement F reads k with p = 1/5
    d, n, k = 5, 100_000, 3
    reg = Registry(d)
    hits = 0
    for _ in range(n):
        pid = reg.create_particle(BasisState(F, k))
        reg.measure_particle(pid, C, rng)
        hits += reg.measure_particle(pid, F, rng) == k
    sigma = math.sqrt(n * 0.2 * 0.8)
    assert abs(hits - n / 5) <= 3 * sigma


def test_inspect_examples(rng):
    reg = Registry(2)
    a = reg.create_particle(BasisState(C, 1))
    np.testing.assert_array_equal(inspect_for_test(reg, a).amplitudes, [0, 1])
    b = reg.create_particle(BasisState(C, 0))
    reg.shift_particle(b, 1)
    np.testing.assert_array_equal(inspect_for_test(reg, b).amplitudes, [0, 1])
    c = reg.create_particle(BasisState(F, 0))
    j = reg.measure_particle(c, C, rng)
    assert equal_up_to_global_phase(inspect_for_test(reg, c), prepare(BasisState(C, j), 2))


def test_inspect_returns_a_copy():
    reg = Registry(2)
    pid = reg.create_particle(BasisState(C, 0))
    snap = inspect_for_test(reg, pid)
    reg.shift_particle(pid, 1)
    np.testing.assert_array_equal(snap.amplitudes, [1, 0])


def test_interface_audit():
    """Create, shift and measure are the only public operations that touch states."""
    public = {
        name
        for name, member in inspect.getmembers(Registry)
        if not name.startswith("_") and callable(member)
    }
    assert public == {"create_particle", "shift_particle", "measure_particle"}
    props = {n for n, m in inspect.getmembers(Registry) if isinstance(m, property)}
    assert props == {"d"}
    import mqpc.testing as t

    assert [n for n, m in inspect.getmembers(t, inspect.isfunction) if m.__module__ == t.__name__] == [
        "inspect_for_test"
    ]


def _imported_names(path):
    tree = ast.parse(path.read_text())
    names = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            names.add(node.module or "")
            names.update(a.name for a in node.names)
        elif isinstance(node, ast.Import):
            names.update(a.name for a in node.names)
        elif isinstance(node, ast.Attribute):
            names.add(node.attr)
        elif isinstance(node, ast.Name):
            names.add(node.id)
    return names


@pytest.mark.parametrize("module", ["protocol.py", "adversary.py", "harness.py", "cli.py"])
def test_roles_cannot_reach_state(module):
    names = _imported_names(PKG / module)
    assert not names & {"testing", "mqpc.testing", "inspect_for_test", "_states", "_get", "StateVector"}
