"""Test-only access to particle state.

Nothing under ``mqpc.protocol`` or ``mqpc.adversary`` may import this
module; the test suite enforces that with an import audit.
"""

from .qudit import StateVector
from .registry import ParticleId, Registry


def inspect_for_test(reg: Registry, pid: ParticleId) -> StateVector:
    """Copy of the state currently bound to ``pid``."""
    return reg._get(pid).copy()
