"""Pure-numpy implementations of the single-qudit kernels.

Mirrors ``_kernels.pyx`` function for function. Used when the compiled
extension is unavailable or ``MQPC_PURE_PYTHON`` is set.
"""

import numpy as np

NAME = "python"


def fourier_state(d, k):
    j = np.arange(d)
    return np.exp(2j * np.pi * j * k / d) / np.sqrt(d)


def shift(amps, m):
    return np.roll(amps, m)


def overlap(a, b):
    """Inner product <a|b>."""
    return complex(np.vdot(a, b))


def probabilities(amps, fourier):
    d = amps.shape[0]
    if not fourier:
        return np.abs(amps) ** 2
    jk = np.outer(np.arange(d), np.arange(d))
    proj = np.exp(-2j * np.pi * jk / d) @ amps / np.sqrt(d)
    return np.abs(proj) ** 2


def sample(probs, u):
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    if idx >= probs.shape[0]:
        # u landed past the last bin through rounding; take the last populated one
        idx = int(np.flatnonzero(probs > 0)[-1])
    return idx


def measure_outcome(amps, fourier, u):
    return sample(probabilities(amps, fourier), u)
