# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled single-qudit kernels. Same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, M_PI

cnp.import_array()

NAME = "cython"


def fourier_state(Py_ssize_t d, Py_ssize_t k):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(d, dtype=np.complex128)
    cdef double norm = 1.0 / sqrt(<double>d)
    cdef double theta
    cdef Py_ssize_t j
    for j in range(d):
        theta = 2.0 * M_PI * <double>(j * k) / <double>d
        out[j] = norm * (cos(theta) + 1j * sin(theta))
    return out


def shift(const double complex[::1] amps, Py_ssize_t m):
    cdef Py_ssize_t d = amps.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(d, dtype=np.complex128)
    cdef Py_ssize_t r
    for r in range(d):
        out[(r + m) % d] = amps[r]
    return out


def overlap(const double complex[::1] a, const double complex[::1] b):
    cdef double complex acc = 0
    cdef Py_ssize_t j
    for j in range(a.shape[0]):
        acc = acc + a[j].conjugate() * b[j]
    return complex(acc)


cdef void _probabilities(const double complex[::1] amps, bint fourier, double[::1] out) noexcept nogil:
    cdef Py_ssize_t d = amps.shape[0]
    cdef Py_ssize_t j, k
    cdef double re, im, theta, c, s
    cdef double norm = 1.0 / <double>d
    for k in range(d):
        if not fourier:
            out[k] = amps[k].real * amps[k].real + amps[k].imag * amps[k].imag
            continue
        re = 0.0
        im = 0.0
        for j in range(d):
            theta = -2.0 * M_PI * <double>(j * k) / <double>d
            c = cos(theta)
            s = sin(theta)
            re += c * amps[j].real - s * amps[j].imag
            im += c * amps[j].imag + s * amps[j].real
        out[k] = (re * re + im * im) * norm


cdef Py_ssize_t _sample(const double[::1] probs, double u) noexcept nogil:
    cdef Py_ssize_t d = probs.shape[0]
    cdef Py_ssize_t j, last = 0
    cdef double total = 0.0, acc = 0.0
    for j in range(d):
        total += probs[j]
        if probs[j] > 0:
            last = j
    u = u * total
    for j in range(d):
        acc += probs[j]
        if u < acc:
            return j
    return last


def probabilities(const double complex[::1] amps, bint fourier):
    out = np.empty(amps.shape[0], dtype=np.float64)
    _probabilities(amps, fourier, out)
    return out


def sample(const double[::1] probs, double u):
    return _sample(probs, u)


def measure_outcome(const double complex[::1] amps, bint fourier, double u):
    cdef double[::1] buf = np.empty(amps.shape[0], dtype=np.float64)
    _probabilities(amps, fourier, buf)
    return _sample(buf, u)
