"""Cell-centered grids, singular-weight quadrature and the Dirichlet Laplacian.

Every grid places its nodes at cell midpoints, so no node sits at the origin
and ``|x_i|**t`` is finite for any real ``t``. The Laplacian realization
``A`` (standing for ``-Δ_h``) is symmetric with respect to the quadrature
weights: ``diag(w) @ A`` is a symmetric matrix.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .problem import Ball, Interval, Rectangle

__all__ = [
    "MIN_CELLS",
    "GridError",
    "Grid",
    "DiscreteOperator",
    "build_grid",
    "assemble_laplacian",
    "weight_vector",
    "weighted_norm",
    "gradient_squared",
    "sphere_area",
]

MIN_CELLS = 8


class GridError(ValueError):
    """Invalid grid configuration."""


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(eq=False)
class Grid:
    """Discrete domain.

    Attributes
    ----------
    kind : str
        ``"interval"``, ``"ball"`` or ``"rectangle"``.
    n : int
        Space dimension of the underlying problem.
    N : int
        Cells per axis (radial cells for the ball).
    h : tuple of float
        Mesh spacing per axis.
    nodes : ndarray
        Node coordinates, shape ``(M,)`` or ``(M, 2)`` for the rectangle.
        Radial grids store radii.
    radius : ndarray
        ``|x_i|`` at every node.
    weights : ndarray
        Quadrature weights ``w_i`` (units length**n).
    """

    kind: str
    n: int
    N: int
    h: tuple
    nodes: np.ndarray
    radius: np.ndarray
    weights: np.ndarray
    domain: object
    shape: tuple
    faces: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def weight_vector(self, t: float) -> np.ndarray:
        return weight_vector(self, t)

    def power_of_radius(self, t: float) -> np.ndarray:
        """Cell average of ``|x|**t`` at every node (cached, read-only).

        Averaging instead of sampling at the midpoint keeps the quadrature
        of singular weights second order away from the origin and removes
        the O(1) bias of the innermost cell. Where the cell integral
        diverges (``t <= -n`` next to the origin) and on the rectangle the
        midpoint value is used.
        """
        t = float(t)
        key = ("r", t)
        with self._lock:
            out = self._cache.get(key)
            if out is None:
                out = _cell_average(self, t) if t != 0.0 else np.ones_like(self.radius)
                out.setflags(write=False)
                self._cache[key] = out
        return out

    def metadata(self) -> dict:
        return {
            "variant": self.kind,
            "n": self.n,
            "N": self.N,
            "h": list(self.h),
            "unknowns": self.size,
            "radial_class_only": self.kind == "ball",
        }

    def to_dict(self) -> dict:
        return {
            **self.metadata(),
            "domain": self.domain.to_dict(),
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }


def _shell_integrals(lo, hi, e):
    """``(hi**e - lo**e) / e`` (``log(hi/lo)`` at ``e = 0``); inf where it diverges."""
    out = np.full(lo.shape, np.inf)
    pos = lo > 0
    if e == 0.0:
        out[pos] = np.log(hi[pos] / lo[pos])
    else:
        out[pos] = lo[pos] ** e * np.expm1(e * np.log(hi[pos] / lo[pos])) / e
        if e > 0:
            out[~pos] = hi[~pos] ** e / e
    return out


def _cell_average(grid: "Grid", t: float) -> np.ndarray:
    mid = grid.radius**t
    if grid.kind == "interval":
        h = grid.h[0]
        lo = np.abs(grid.radius) - 0.5 * h
        lo = np.maximum(lo, 0.0)
        avg = _shell_integrals(lo, lo + h, t + 1.0) / h
    elif grid.kind == "ball":
        f = grid.faces
        avg = sphere_area(grid.n) * _shell_integrals(f[:-1], f[1:], t + grid.n) / grid.weights
    else:
        return mid
    return np.where(np.isfinite(avg), avg, mid)


def build_grid(domain, n: int, N: int, *, min_cells: int = MIN_CELLS) -> Grid:
    """Cell-centered grid with ``N`` cells per axis.

    The interval and rectangle need an even ``N`` so that cell centers
    straddle the origin instead of landing on it. ``min_cells`` lowers the
    coarseness guard for hand-checkable toy grids.
    """
    if int(N) != N or N < max(min_cells, 2):
        raise GridError(f"need an integer N >= {min_cells}, got {N}")
    N = int(N)
    if isinstance(domain, Interval):
        if n != 1:
            raise GridError("interval grids are one-dimensional")
        if N % 2:
            raise GridError("interval grids need an even N (no node at the origin)")
        R = float(domain.R)
        h = 2.0 * R / N
        x = -R + (np.arange(N) + 0.5) * h
        w = np.full(N, h)
        return Grid("interval", 1, N, (h,), x, np.abs(x), w, domain, (N,))
    if isinstance(domain, Ball):
        if n < 1:
            raise GridError("dimension must be positive")
        R = float(domain.R)
        h = R / N
        faces = np.arange(N + 1) * h
        r = (np.arange(N) + 0.5) * h
        # exact shell measure; equals |S| r_i^{n-1} h for n <= 2
        w = sphere_area(n) * (faces[1:] ** n - faces[:-1] ** n) / n
        return Grid("ball", int(n), N, (h,), r, r.copy(), w, domain, (N,), faces=faces)
    if isinstance(domain, Rectangle):
        if n != 2:
            raise GridError("rectangle grids are two-dimensional")
        if N % 2:
            raise GridError("rectangle grids need an even N per axis")
        hx = 2.0 * domain.Lx / N
        hy = 2.0 * domain.Ly / N
        x = -domain.Lx + (np.arange(N) + 0.5) * hx
        y = -domain.Ly + (np.arange(N) + 0.5) * hy
        X, Y = np.meshgrid(x, y, indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        w = np.full(N * N, hx * hy)
        return Grid("rectangle", 2, N, (hx, hy), nodes, np.hypot(X, Y).ravel(), w,
                    domain, (N, N))
    raise GridError(f"unsupported domain {domain!r}")


def weight_vector(grid: Grid, t: float) -> np.ndarray:
    """``w_i`` times the cell average of ``|x|**t``, i.e. the cell integral.

    Cached per exponent, read-only.
    """
    t = float(t)
    key = ("w", t)
    with grid._lock:
        out = grid._cache.get(key)
    if out is None:
        out = grid.weights * grid.power_of_radius(t)
        out.setflags(write=False)
        with grid._lock:
            out = grid._cache.setdefault(key, out)
    return out


def weighted_norm(grid: Grid, t: float, values, power: float) -> float:
    """``(sum_i W_t,i |values_i|**power)**(1/power)`` with ``W_t = weight_vector(grid, t)``."""
    if power < 1:
        raise ValueError(f"power must be >= 1, got {power}")
    values = np.asarray(values, dtype=np.float64)
    total = float(np.dot(weight_vector(grid, t), np.abs(values) ** power))
    return total ** (1.0 / power)


@dataclass(eq=False)
class DiscreteOperator:
    """Sparse matrix ``A`` realizing ``-Δ_h`` with zero Dirichlet data.

    ``bands`` holds ``(lower, diag, upper)`` when ``A`` is tridiagonal.
    """

    matrix: sp.csr_matrix
    description: str
    symmetric: bool
    bands: tuple | None = None

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x

    def to_triplets(self) -> dict:
        coo = self.matrix.tocoo()
        return {
            "description": self.description,
            "symmetric": self.symmetric,
            "shape": list(coo.shape),
            "row": coo.row.tolist(),
            "col": coo.col.tolist(),
            "data": coo.data.tolist(),
        }


def _interval_bands(N: int, h: float):
    c = 1.0 / (h * h)
    lower = np.full(N, -c)
    upper = np.full(N, -c)
    diag = np.full(N, 2.0 * c)
    # ghost value -u mirrors the zero boundary datum half a cell away
    diag[0] = diag[-1] = 3.0 * c
    lower[0] = 0.0
    upper[-1] = 0.0
    return lower, diag, upper


def _radial_bands(grid: Grid):
    N, n = grid.N, grid.n
    dr = grid.h[0]
    faces = grid.faces
    area = sphere_area(n)
    # face conductances |S| r_f^{n-1} / dr; origin face carries no flux
    cond = area * faces ** (n - 1) / dr
    cond[0] = 0.0
    cond[-1] = 2.0 * area * faces[-1] ** (n - 1) / dr
    vol = grid.weights
    lower = np.zeros(N)
    upper = np.zeros(N)
    lower[1:] = -cond[1:N] / vol[1:]
    upper[:-1] = -cond[1:N] / vol[:-1]
    diag = (cond[:N] + cond[1:]) / vol
    return lower, diag, upper


def _tridiag_matrix(lower, diag, upper):
    N = diag.shape[0]
    return sp.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], shape=(N, N), format="csr")


def assemble_laplacian(grid: Grid, n: int | None = None) -> DiscreteOperator:
    """``-Δ_h`` on ``grid`` with homogeneous Dirichlet data on the boundary.

    The ball uses the flux form ``-(r^{n-1} u')' / r^{n-1}`` with a zero-flux
    face at the origin.
    """
    if n is not None and n != grid.n:
        raise GridError(f"grid built for n={grid.n}, asked for n={n}")
    if grid.kind == "interval":
        bands = _interval_bands(grid.N, grid.h[0])
        return DiscreteOperator(_tridiag_matrix(*bands), "dirichlet_laplacian", True, bands)
    if grid.kind == "ball":
        bands = _radial_bands(grid)
        return DiscreteOperator(_tridiag_matrix(*bands), "dirichlet_laplacian", False, bands)
    if grid.kind == "rectangle":
        N = grid.N
        ax = _tridiag_matrix(*_interval_bands(N, grid.h[0]))
        ay = _tridiag_matrix(*_interval_bands(N, grid.h[1]))
        eye = sp.identity(N, format="csr")
        mat = (sp.kron(ax, eye) + sp.kron(eye, ay)).tocsr()
        return DiscreteOperator(mat, "dirichlet_laplacian", True, None)
    raise GridError(f"unsupported grid kind {grid.kind!r}")


def _centered_1d(u, h, left_ghost, right_ghost):
    ext = np.concatenate([[left_ghost], u, [right_ghost]])
    return (ext[2:] - ext[:-2]) / (2.0 * h)


def gradient_squared(grid: Grid, u) -> np.ndarray:
    """``|∇_h u|**2`` from centered differences at cell centers.

    Ghost values follow the Laplacian closures: ``-u`` across a Dirichlet
    face, ``u`` across the radial origin face.
    """
    u = np.asarray(u, dtype=np.float64)
    if grid.kind == "interval":
        g = _centered_1d(u, grid.h[0], -u[0], -u[-1])
        return g * g
    if grid.kind == "ball":
        g = _centered_1d(u, grid.h[0], u[0], -u[-1])
        return g * g
    if grid.kind == "rectangle":
        U = u.reshape(grid.shape)
        pad = np.pad(U, 1)
        pad[0, 1:-1] = -U[0]
        pad[-1, 1:-1] = -U[-1]
        pad[1:-1, 0] = -U[:, 0]
        pad[1:-1, -1] = -U[:, -1]
        gx = (pad[2:, 1:-1] - pad[:-2, 1:-1]) / (2.0 * grid.h[0])
        gy = (pad[1:-1, 2:] - pad[1:-1, :-2]) / (2.0 * grid.h[1])
        return (gx * gx + gy * gy).ravel()
    raise GridError(f"unsupported grid kind {grid.kind!r}")
