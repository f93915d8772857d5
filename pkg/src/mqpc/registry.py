"""Particle registry.

Protocol roles and adversaries only ever hold integer particle handles.
The registry owns the state vectors and offers exactly three operations
on them: create, shift, measure. There is no way to read amplitudes or
obtain a second handle to an existing state through this interface.
"""

from __future__ import annotations

from typing import NewType

import numpy as np

from . import kernels
from .qudit import Basis, BasisState, StateVector, apply_shift, prepare

ParticleId = NewType("ParticleId", int)


class ParticleNotFound(KeyError):
    pass


class Registry:
    """All live particles of one protocol run, in a single dimension ``d``.

    Particles are never deleted; a measured particle stays in its
    collapsed state.
    """

    __slots__ = ("_d", "_states", "_counter")

    def __init__(self, d: int):
        if d < 2:
            raise ValueError(f"dimension must be >= 2, got {d}")
        self._d = d
        self._states: dict[int, StateVector] = {}
        self._counter = 0

    @property
    def d(self) -> int:
        return self._d

    def __len__(self):
        return len(self._states)

    def __contains__(self, pid):
        return pid in self._states

    def create_particle(self, b: BasisState) -> ParticleId:
        if not 0 <= b.index < self._d:
            raise ValueError(f"index {b.index} out of range for registry dimension {self._d}")
        pid = ParticleId(self._counter)
        self._counter += 1
        self._states[pid] = prepare(b, self._d)
        return pid

    def _get(self, pid) -> StateVector:
        try:
            return self._states[pid]
        except KeyError:
            raise ParticleNotFound(pid) from None

    def shift_particle(self, pid: ParticleId, m: int) -> None:
        self._states[pid] = apply_shift(self._get(pid), m % self._d)

    def measure_particle(self, pid: ParticleId, basis: Basis, rng: np.random.Generator) -> int:
        state = self._get(pid)
        k = kernels.measure_outcome(state.amplitudes, basis is Basis.FOURIER, rng.random())
        self._states[pid] = prepare(BasisState(basis, k), self._d)
        return k
