"""Divergence-form elliptic operator, Dirichlet solves and the
Dirichlet-to-Neumann map.

The operator is stored as a symmetric positive semi-definite stiffness matrix
``K`` over all nodes, so that for a nodal field ``u``

* rows of ``K u`` at unknown nodes vanish when ``u`` is discretely a-harmonic,
* ``(K u)_b / face_b`` is the outward conormal flux ``a (A grad u) . nu`` at
  boundary node ``b``.

Disk grids use a polar finite-volume stencil with arithmetic face averages of
``a``. Half-space grids use piecewise-linear elements on a right-triangle split
of each square, with the tensor ``a * A`` averaged over the triangle vertices;
for an isotropic tensor this reproduces the 5-point stencil, for a chart tensor
it adds one diagonal coupling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .grid import FlattenedChart, Grid

__all__ = [
    "SparseOperator",
    "GridFunction",
    "SolverError",
    "CoefficientBoundError",
    "assemble",
    "solve_dirichlet",
    "normal_derivative",
    "dtn_apply",
    "dtn_matrix",
    "conjugate_gradient",
]

DEFAULT_TOL = 1e-10


class SolverError(RuntimeError):
    """Raised when conjugate gradients fails to reach the requested residual."""


class CoefficientBoundError(ValueError):
    """Raised when a coefficient leaves its admissible band ``[1/Lambda, Lambda]``."""


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Assembled stiffness matrix with the index blocks used by the solvers.

    Attributes
    ----------
    grid : Grid
    K : scipy.sparse.csr_matrix, shape (N, N)
        Symmetric stiffness matrix of ``-div(a A grad .)`` integrated over cells.
    a : ndarray, shape (N,)
        Nodal coefficient used in the assembly.
    chart : FlattenedChart or None
    symmetric : bool
    """

    grid: Grid
    K: sp.csr_matrix
    a: np.ndarray
    chart: FlattenedChart | None = None
    symmetric: bool = True

    @property
    def free(self) -> np.ndarray:
        return self.grid.free

    @property
    def K_ff(self) -> sp.csr_matrix:
        f = self.free
        return self.K[f][:, f].tocsr()

    @property
    def stencil(self) -> sp.csr_matrix:
        """Nodal Laplacian-like matrix ``-diag(1/vol) K``.

        Interior rows equal the standard difference stencil of
        ``div(a A grad u)``; for ``a = 1`` on the half-space that is
        ``(u_E + u_W + u_N + u_S - 4 u) / h^2``.
        """
        return (-sp.diags(1.0 / self.grid.volumes) @ self.K).tocsr()

    def boundary_flux(self, u: np.ndarray) -> np.ndarray:
        """Outward conormal flux ``a (A grad u) . nu`` per boundary node."""
        b = self.grid.boundary
        return (self.K @ u)[b] / self.grid.face


@dataclass(frozen=True, eq=False)
class GridFunction:
    """One value per node of ``grid``."""

    grid: Grid
    values: np.ndarray

    @property
    def boundary_values(self) -> np.ndarray:
        return self.values[self.grid.boundary]


def _nodal(grid: Grid, a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n_nodes, float(arr))
    if arr.shape != (grid.n_nodes,):
        raise ValueError(f"coefficient has shape {arr.shape}, expected ({grid.n_nodes},)")
    return arr


def check_band(values: np.ndarray, Lambda: float | None, name: str = "a") -> None:
    """Raise :class:`CoefficientBoundError` unless ``values`` lie in ``[1/Lambda, Lambda]``."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise CoefficientBoundError(f"coefficient {name} has non-finite values")
    if Lambda is None:
        if np.any(values <= 0):
            raise CoefficientBoundError(f"coefficient {name} must be positive")
        return
    lo, hi = 1.0 / Lambda, Lambda
    tol = 1e-12
    if np.min(values) < lo - tol or np.max(values) > hi + tol:
        raise CoefficientBoundError(
            f"coefficient {name} ranges over [{np.min(values):.6g}, {np.max(values):.6g}], "
            f"outside [1/Lambda, Lambda] = [{lo:.6g}, {hi:.6g}]"
        )


def _edges_matrix(n: int, i: np.ndarray, j: np.ndarray, w: np.ndarray) -> sp.csr_matrix:
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([w, w, -w, -w])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _assemble_disk(grid: Grid, a: np.ndarray) -> sp.csr_matrix:
    n_r, n_t = grid.shape
    hr = grid.h
    ht = 2.0 * np.pi / n_t
    N = grid.n_nodes
    idx = 1 + np.arange((n_r - 1) * n_t).reshape(n_r - 1, n_t)
    I, J, W = [], [], []
    # center to ring 1
    ring1 = idx[0]
    I.append(np.zeros(n_t, dtype=int))
    J.append(ring1)
    W.append(0.5 * (a[0] + a[ring1]) * ht / 2.0)
    # radial edges between ring i and i+1 (rings numbered from 1)
    if n_r > 2:
        inner = idx[:-1].ravel()
        outer = idx[1:].ravel()
        r_half = np.repeat((np.arange(1, n_r - 1) + 0.5) * hr, n_t)
        I.append(inner)
        J.append(outer)
        W.append(0.5 * (a[inner] + a[outer]) * r_half * ht / hr)
    # angular edges
    a_idx = idx.ravel()
    b_idx = np.roll(idx, -1, axis=1).ravel()
    r = np.repeat(np.arange(1, n_r) * hr, n_t)
    ext = np.full(r.shape, hr)
    ext[-n_t:] = hr / 2.0
    I.append(a_idx)
    J.append(b_idx)
    W.append(0.5 * (a[a_idx] + a[b_idx]) * ext / (r * ht))
    return _edges_matrix(N, np.concatenate(I), np.concatenate(J), np.concatenate(W))


def _halfspace_triangles(grid: Grid) -> np.ndarray:
    nx, ny = grid.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    p00 = idx[:-1, :-1].ravel()
    p10 = idx[1:, :-1].ravel()
    p11 = idx[1:, 1:].ravel()
    p01 = idx[:-1, 1:].ravel()
    t1 = np.column_stack([p00, p10, p11])
    t2 = np.column_stack([p00, p11, p01])
    return np.vstack([t1, t2])


def _assemble_p1(grid: Grid, a: np.ndarray, tensor: np.ndarray) -> sp.csr_matrix:
    tri = _halfspace_triangles(grid)
    P = grid.points[tri]  # (T, 3, 2)
    # barycentric gradients
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * np.abs(det)
    inv = np.empty((tri.shape[0], 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det
    # gradients of lambda_1, lambda_2 are the rows of inv; lambda_0 = -(sum)
    G = np.empty((tri.shape[0], 3, 2))
    G[:, 1] = inv[:, 0]
    G[:, 2] = inv[:, 1]
    G[:, 0] = -(inv[:, 0] + inv[:, 1])
    A = np.mean(a[tri][:, :, None, None] * tensor[tri], axis=1)  # (T, 2, 2)
    Ke = area[:, None, None] * np.einsum("tik,tkl,tjl->tij", G, A, G)
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    N = grid.n_nodes
    K = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(N, N))
    K.sum_duplicates()
    return K


def assemble(grid: Grid, a=1.0, chart: FlattenedChart | None = None, Lambda: float | None = None) -> SparseOperator:
    """Assemble ``-div(a A grad u)`` on ``grid``.

    Parameters
    ----------
    grid : Grid
    a : float or ndarray, shape (N,)
        Scalar coefficient at the nodes.
    chart : FlattenedChart, optional
        Supplies the matrix field ``A``; identity when omitted. Only the
        half-space grid accepts a chart.
    Lambda : float, optional
        Ellipticity bound. When given, ``a`` and the chart eigenvalues must lie
        in ``[1/Lambda, Lambda]``; otherwise ``a`` must merely be positive.

    Returns
    -------
    SparseOperator
    """
    an = _nodal(grid, a)
    check_band(an, Lambda, "a")
    if chart is not None and Lambda is not None:
        lo, hi = chart.eigen_bounds()
        if lo < 1.0 / Lambda - 1e-12 or hi > Lambda + 1e-12:
            raise CoefficientBoundError(
                f"chart matrix eigenvalues [{lo:.6g}, {hi:.6g}] leave [1/Lambda, Lambda] for Lambda={Lambda}"
            )
    if grid.kind == "disk":
        if chart is not None and not chart.is_identity:
            raise ValueError("charts are defined on half-space grids only")
        K = _assemble_disk(grid, an)
    else:
        tensor = chart.a if chart is not None else np.broadcast_to(np.eye(2), (grid.n_nodes, 2, 2))
        K = _assemble_p1(grid, an, tensor)
    K = ((K + K.T) * 0.5).tocsr()
    return SparseOperator(grid=grid, K=K, a=an, chart=chart)


def conjugate_gradient(A: sp.spmatrix, b: np.ndarray, tol: float = DEFAULT_TOL, x0: np.ndarray | None = None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients with an iteration cap of ``20 n``.

    Raises
    ------
    SolverError
        If the relative residual ``tol`` is not reached.
    """
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    if not np.any(b):
        return np.zeros(n)
    d = A.diagonal()
    M = sp.diags(1.0 / d)
    x, info = cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=20 * n, M=M)
    if info != 0:
        res = np.linalg.norm(b - A @ x) / np.linalg.norm(b)
        raise SolverError(f"conjugate gradients stopped with relative residual {res:.3e} > {tol:.1e} ({info} iterations)")
    return x


def solve_dirichlet(
    op: SparseOperator,
    g: np.ndarray,
    tol: float = DEFAULT_TOL,
    wall: np.ndarray | None = None,
    x0: np.ndarray | None = None,
) -> GridFunction:
    """Discretely a-harmonic field with boundary values ``g``.

    Parameters
    ----------
    op : SparseOperator
    g : ndarray, shape (n_boundary,)
    tol : float
        Relative residual for conjugate gradients, in ``(0, 1e-6]``.
    wall : ndarray, optional
        Values on the artificial walls (``grid.dirichlet``); zero by default.
    x0 : ndarray, shape (N,), optional
        Initial guess (only its unknown entries are used).
    """
    if not (0 < tol <= 1e-6):
        raise ValueError(f"tol={tol} must lie in (0, 1e-6]")
    grid = op.grid
    u = np.zeros(grid.n_nodes)
    u[grid.boundary] = g
    if grid.dirichlet.size:
        u[grid.dirichlet] = 0.0 if wall is None else wall
    f = grid.free
    rhs = -(op.K @ u)[f]
    guess = None if x0 is None else np.asarray(x0)[f]
    u[f] = conjugate_gradient(op.K_ff, rhs, tol, guess)
    return GridFunction(grid, u)


def normal_derivative(u: GridFunction) -> np.ndarray:
    """Second-order one-sided outer normal derivative at the boundary nodes.

    Raises
    ------
    ValueError
        If the grid has fewer than three nodes along the normal direction.
    """
    grid = u.grid
    v = u.values
    if grid.kind == "halfspace":
        nx, ny = grid.shape
        w = v.reshape(nx, ny)
        # nu = -e_2, so d_nu u = -d_2 u
        return -(-3 * w[:, 0] + 4 * w[:, 1] - w[:, 2]) / (2 * grid.h)
    n_r, n_t = grid.shape
    if n_r < 3:
        raise ValueError("grid too coarse for the 3-point one-sided stencil (need n_r >= 3)")
    b = grid.boundary
    u1 = v[b - n_t]
    u2 = v[b - 2 * n_t] if n_r > 3 else np.full(n_t, v[0])
    return (3 * v[b] - 4 * u1 + u2) / (2 * grid.h)


def dtn_apply(
    grid: Grid,
    a,
    g: np.ndarray,
    chart: FlattenedChart | None = None,
    tol: float = DEFAULT_TOL,
    op: SparseOperator | None = None,
) -> np.ndarray:
    """Dirichlet-to-Neumann map: outward derivative of the a-harmonic extension of ``g``.

    The flux is read off the boundary rows of the assembled operator and divided
    by ``a`` at the node, which keeps the map symmetric and second-order. With a
    chart the result is the conormal derivative ``(A grad U) . nu``.
    """
    if op is None:
        op = assemble(grid, a, chart)
    U = solve_dirichlet(op, g, tol)
    return op.boundary_flux(U.values) / op.a[grid.boundary]


def dtn_matrix(grid: Grid, a=1.0, tol: float = 1e-12) -> np.ndarray:
    """Dense boundary-to-boundary DtN matrix, one column per boundary node.

    Raises
    ------
    ValueError
        If the grid has more than 512 boundary nodes.
    """
    nb = grid.boundary.size
    if nb > 512:
        raise ValueError(f"{nb} boundary nodes is too many for dense DtN assembly (limit 512)")
    op = assemble(grid, a)
    M = np.empty((nb, nb))
    for k in range(nb):
        e = np.zeros(nb)
        e[k] = 1.0
        M[:, k] = dtn_apply(grid, a, e, tol=tol, op=op)
    return M
