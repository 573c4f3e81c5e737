"""Pure numpy/scipy implementations of the compiled kernels."""

import numpy as np
from scipy.linalg import solve_banded

BACKEND = "python"


def signed_power(x, q, w=None):
    """w_i |x_i|^{q-2} x_i, with the continuous value 0 at x_i = 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.abs(x) ** (q - 1.0)
    if w is not None:
        out *= w
    return out


def weighted_power_sum(x, w, power):
    """sum_i w_i |x_i|^power."""
    x = np.asarray(x, dtype=np.float64)
    if power == 2.0:
        return float(np.dot(w, x * x))
    return float(np.dot(w, np.abs(x) ** power))


class TridiagonalSolver:
    """Tridiagonal system solved through LAPACK's banded driver.

    ``lower[i]`` couples row i to i-1 (``lower[0]`` unused), ``upper[i]``
    couples row i to i+1 (``upper[n-1]`` unused).
    """

    def __init__(self, lower, diag, upper):
        diag = np.asarray(diag, dtype=np.float64)
        self.n = diag.shape[0]
        ab = np.zeros((3, self.n))
        ab[0, 1:] = np.asarray(upper, dtype=np.float64)[:-1]
        ab[1] = diag
        ab[2, :-1] = np.asarray(lower, dtype=np.float64)[1:]
        self._ab = ab

    def solve(self, rhs):
        return solve_banded((1, 1), self._ab, np.asarray(rhs, dtype=np.float64),
                            check_finite=False)
