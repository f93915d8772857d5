"""Exact simulator of circular multi-party quantum private comparison with qudits."""

from .kernels import BACKEND
from .protocol import (
    Aborted,
    Equal,
    KeyTable,
    NotEqual,
    ProtocolConfig,
    SecretTable,
    run_protocol,
)
from .qudit import Basis, BasisState, StateVector
from .registry import ParticleId, Registry

__all__ = [
    "BACKEND",
    "Aborted",
    "Equal",
    "KeyTable",
    "NotEqual",
    "ProtocolConfig",
    "SecretTable",
    "run_protocol",
    "Basis",
    "BasisState",
    "StateVector",
    "ParticleId",
    "Registry",
]
