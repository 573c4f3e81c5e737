# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the inverse-iteration hot loop.

Mirrors the pure-Python fallback in ``_kernels_py`` function by function.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()

BACKEND = "cython"


def signed_power(const double[::1] x, double q, const double[::1] w=None):
    """w_i |x_i|^{q-2} x_i, with the continuous value 0 at x_i = 0."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double e = q - 1.0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    if e == 1.0:
        for i in range(n):
            o[i] = x[i]
    elif e == 2.0:
        for i in range(n):
            o[i] = x[i] * fabs(x[i])
    else:
        # scalar libm pow loses to numpy's vectorized pow here
        xa = np.asarray(x)
        out = np.sign(xa) * np.abs(xa) ** e
        o = out
    if w is not None:
        for i in range(n):
            o[i] *= w[i]
    return out


def weighted_power_sum(const double[::1] x, const double[::1] w, double power):
    """sum_i w_i |x_i|^power."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double acc = 0.0, ax
    if power == 2.0:
        for i in range(n):
            acc += w[i] * x[i] * x[i]
    else:
        for i in range(n):
            ax = fabs(x[i])
            if ax > 0.0:
                acc += w[i] * pow(ax, power)
    return acc


cdef class TridiagonalSolver:
    """LU-factorized tridiagonal system (no pivoting; M-matrix input).

    ``lower[i]`` couples row i to i-1 (``lower[0]`` unused), ``upper[i]``
    couples row i to i+1 (``upper[n-1]`` unused).
    """

    cdef double[::1] _l
    cdef double[::1] _u
    cdef double[::1] _dinv
    cdef readonly Py_ssize_t n

    def __init__(self, lower, diag, upper):
        cdef Py_ssize_t i
        cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
        cdef double[::1] di = np.ascontiguousarray(diag, dtype=np.float64)
        cdef double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
        self.n = di.shape[0]
        self._l = np.array(lo, copy=True)
        self._u = np.array(up, copy=True)
        self._dinv = np.empty(self.n, dtype=np.float64)
        cdef double piv = di[0]
        if piv == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal factorization")
        self._dinv[0] = 1.0 / piv
        for i in range(1, self.n):
            piv = di[i] - lo[i] * up[i - 1] * self._dinv[i - 1]
            if piv == 0.0:
                raise ZeroDivisionError("zero pivot in tridiagonal factorization")
            self._dinv[i] = 1.0 / piv

    def solve(self, const double[::1] rhs):
        cdef Py_ssize_t i, n = self.n
        out = np.empty(n, dtype=np.float64)
        cdef double[::1] y = out
        y[0] = rhs[0]
        for i in range(1, n):
            y[i] = rhs[i] - self._l[i] * self._dinv[i - 1] * y[i - 1]
        y[n - 1] = y[n - 1] * self._dinv[n - 1]
        for i in range(n - 2, -1, -1):
            y[i] = (y[i] - self._u[i] * y[i + 1]) * self._dinv[i]
        return out
