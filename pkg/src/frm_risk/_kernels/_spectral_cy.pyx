# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled spectral-sum kernels.

Same contract as _spectral_py; sequential summation over contiguous float64
arrays, no temporaries.
"""

BACKEND = "compiled"


def resolvent_trace(const double[::1] eigs, double shift, double scale, int power):
    """(1/n) * sum_i 1/(shift + scale*eigs[i])**power for power in {1, 2}."""
    cdef Py_ssize_t i, n = eigs.shape[0]
    cdef double acc = 0.0
    cdef double t
    if power == 1:
        for i in range(n):
            acc += 1.0 / (shift + scale * eigs[i])
    else:
        for i in range(n):
            t = shift + scale * eigs[i]
            acc += 1.0 / (t * t)
    return acc / n


def weighted_resolvent_sum(const double[::1] weights, const double[::1] eigs,
                           double shift, double scale, int power):
    """sum_i weights[i]/(shift + scale*eigs[i])**power for power in {1, 2}."""
    cdef Py_ssize_t i, n = eigs.shape[0]
    cdef double acc = 0.0
    cdef double t
    if power == 1:
        for i in range(n):
            acc += weights[i] / (shift + scale * eigs[i])
    else:
        for i in range(n):
            t = shift + scale * eigs[i]
            acc += weights[i] / (t * t)
    return acc
