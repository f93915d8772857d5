"""Backend selection for the single-qudit kernels.

The compiled extension is used when it imports cleanly; setting
``MQPC_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

if os.environ.get("MQPC_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.NAME

fourier_state = _impl.fourier_state
shift = _impl.shift
overlap = _impl.overlap
probabilities = _impl.probabilities
sample = _impl.sample
measure_outcome = _impl.measure_outcome

__all__ = [
    "BACKEND",
    "fourier_state",
    "shift",
    "overlap",
    "probabilities",
    "sample",
    "measure_outcome",
]
