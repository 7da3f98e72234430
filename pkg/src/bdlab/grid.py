"""Discrete domains: the polar unit disk, the half-space rectangle, flattened
boundary charts and space-time cylinders.

Node numbering
--------------
Disk grids put the center at index 0 and ring ``i`` (``1 <= i < n_r``, radius
``i / (n_r - 1)``) at indices ``1 + (i - 1) * n_theta + j`` with angle
``theta_j = 2 pi j / n_theta``. The outer ring is the boundary.

Half-space grids cover ``[-R, R] x [0, R]`` with spacing ``h``; node ``(i, j)``
sits at ``(-R + i h, j h)`` and has index ``i * ny + j``. The row ``j = 0`` is
the boundary ``x_2 = 0``. The two side walls and the top wall are artificial:
they are stored in ``Grid.dirichlet`` and carry prescribed values.

Every node owns a control cell (an annular sector on the disk, a clipped
square on the half-space). Cell areas are stored in ``Grid.volumes`` and
boundary face lengths in ``Grid.face``; both feed the solvers and the cylinder
quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "FlattenedChart",
    "Cylinder",
    "build_disk_grid",
    "build_halfspace_grid",
    "build_chart",
    "chart_condition_bound",
    "cylinder_nodes",
    "time_weights",
]

_SUB = 8  # sub-samples per direction for partially covered cells


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable node set with boundary data.

    Attributes
    ----------
    kind : {"disk", "halfspace"}
    h : float
        Spatial step (radial step for the disk).
    points : ndarray, shape (N, 2)
    interior, boundary : ndarray of int
        Disjoint index sets covering all nodes.
    normals : ndarray, shape (n_boundary, 2)
        Outer unit normal at each boundary node.
    shape : tuple of int
        ``(n_r, n_theta)`` for the disk, ``(nx, ny)`` for the half-space.
    R : float
        Radius of the disk (1) or half-width of the rectangle.
    dirichlet : ndarray of int
        Artificial-wall nodes (a subset of ``interior``); empty for the disk.
    volumes : ndarray, shape (N,)
        Control-cell areas.
    face : ndarray, shape (n_boundary,)
        Boundary face lengths.
    """

    kind: str
    h: float
    points: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray
    normals: np.ndarray
    shape: tuple
    R: float
    dirichlet: np.ndarray
    volumes: np.ndarray
    face: np.ndarray
    dim: int = 2
    _cells: tuple = field(default=(), repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def free(self) -> np.ndarray:
        """Interior nodes that are not artificial walls (the elliptic unknowns)."""
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.interior] = True
        mask[self.dirichlet] = False
        return np.flatnonzero(mask)

    @property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary] = True
        return mask

    @property
    def theta(self) -> np.ndarray:
        """Polar angle of every node (0 at the disk center)."""
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    @property
    def radius(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])

    # ------------------------------------------------------------------
    # derivatives
    def spatial_gradient(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian gradient of nodal values, shape ``(..., N)``.

        Second-order differences: centered inside, one-sided at the edges.
        On the disk the polar derivatives are converted to Cartesian ones and
        the center value comes from the first Fourier mode of ring 1.
        """
        values = np.asarray(values, dtype=float)
        lead = values.shape[:-1]
        if self.kind == "halfspace":
            nx, ny = self.shape
            v = values.reshape(lead + (nx, ny))
            gx = np.gradient(v, self.h, axis=-2, edge_order=2)
            gy = np.gradient(v, self.h, axis=-1, edge_order=2)
            return gx.reshape(values.shape), gy.reshape(values.shape)
        n_r, n_t = self.shape
        hr = self.h
        rings = values[..., 1:].reshape(lead + (n_r - 1, n_t))
        center = values[..., :1]
        full = np.concatenate([np.broadcast_to(center[..., None], lead + (1, n_t)), rings], axis=-2)
        if n_r >= 3:
            ur = np.gradient(full, hr, axis=-2, edge_order=2)[..., 1:, :]
        else:
            ur = (full[..., 1:, :] - full[..., :1, :]) / hr
        ht = 2.0 * np.pi / n_t
        uth = (np.roll(rings, -1, axis=-1) - np.roll(rings, 1, axis=-1)) / (2.0 * ht)
        r = (np.arange(1, n_r) * hr)[:, None]
        th = (np.arange(n_t) * ht)[None, :]
        c, s = np.cos(th), np.sin(th)
        gx = c * ur - s * uth / r
        gy = s * ur + c * uth / r
        ring1 = rings[..., 0, :]
        gx0 = 2.0 / n_t * np.sum(ring1 * np.cos(th[0]), axis=-1) / hr
        gy0 = 2.0 / n_t * np.sum(ring1 * np.sin(th[0]), axis=-1) / hr
        out_x = np.concatenate([gx0[..., None], gx.reshape(lead + (-1,))], axis=-1)
        out_y = np.concatenate([gy0[..., None], gy.reshape(lead + (-1,))], axis=-1)
        return out_x, out_y

    # ------------------------------------------------------------------
    # cell geometry for quadrature
    def cell_samples(self) -> tuple[np.ndarray, np.ndarray]:
        """Sub-cell sample points ``(N, S, 2)`` and areas ``(N, S)``."""
        return self._cells

    def ball_weights(self, center: tuple[float, float], rho: float) -> tuple[np.ndarray, np.ndarray]:
        """Area of each cell and length of each boundary face inside the open ball.

        Returns
        -------
        vol : ndarray, shape (N,)
            ``|cell_k ∩ B(center, rho)|``.
        face : ndarray, shape (n_boundary,)
            ``|face_k ∩ B(center, rho)|``.
        """
        return _ball_weights(self, (float(center[0]), float(center[1])), float(rho))


def _ball_weights(grid: Grid, center: tuple, rho: float):
    key = ("ball", center, rho)
    hit = grid._cache.get(key)
    if hit is not None:
        return hit
    pts, areas = grid.cell_samples()
    c = np.asarray(center)
    d = np.linalg.norm(pts - c, axis=-1)
    vol = np.sum(np.where(d < rho, areas, 0.0), axis=1)
    # boundary faces
    if grid.kind == "halfspace":
        xb = grid.points[grid.boundary, 0]
        h = grid.h
        lo = np.maximum(xb - h / 2, -grid.R)
        hi = np.minimum(xb + h / 2, grid.R)
        if abs(c[1]) < rho:
            half = np.sqrt(rho**2 - c[1] ** 2)
            lo2 = np.maximum(lo, c[0] - half)
            hi2 = np.minimum(hi, c[0] + half)
            face = np.clip(hi2 - lo2, 0.0, None)
        else:
            face = np.zeros_like(xb)
    else:
        n_t = grid.shape[1]
        ht = 2.0 * np.pi / n_t
        th = np.arange(n_t) * ht
        sub = (np.arange(4 * _SUB) + 0.5) / (4 * _SUB) - 0.5
        ang = th[:, None] + sub[None, :] * ht
        fp = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        inside = np.linalg.norm(fp - c, axis=-1) < rho
        face = inside.mean(axis=1) * ht
    grid._cache[key] = (vol, face)
    return vol, face


def _disk_cells(n_r: int, n_t: int, hr: float):
    ht = 2.0 * np.pi / n_t
    s = _SUB
    fr = (np.arange(s) + 0.5) / s
    n = 1 + (n_r - 1) * n_t
    pts = np.zeros((n, s * s, 2))
    areas = np.zeros((n, s * s))
    # center cell: disk of radius hr/2
    rr = fr * hr / 2
    aa = 2 * np.pi * fr - np.pi
    R_, A_ = np.meshgrid(rr, aa, indexing="ij")
    pts[0, :, 0] = (R_ * np.cos(A_)).ravel()
    pts[0, :, 1] = (R_ * np.sin(A_)).ravel()
    areas[0] = (R_ * (hr / 2) / s * 2 * np.pi / s).ravel()
    i = np.arange(1, n_r)
    r_lo = (i - 0.5) * hr
    r_hi = np.minimum((i + 0.5) * hr, 1.0)
    dr = (r_hi - r_lo) / s
    # (ring, sub_r) radii and (node, sub_theta) angles
    rr = r_lo[:, None] + fr[None, :] * (r_hi - r_lo)[:, None]
    aa = (np.arange(n_t) * ht)[:, None] + (fr - 0.5)[None, :] * ht
    Rg = rr[:, None, :, None]  # ring, node, sub_r, sub_t
    Ag = aa[None, :, None, :]
    X = (Rg * np.cos(Ag)).reshape(n - 1, s * s)
    Y = (Rg * np.sin(Ag)).reshape(n - 1, s * s)
    pts[1:, :, 0] = X
    pts[1:, :, 1] = Y
    areas[1:] = np.broadcast_to(Rg * dr[:, None, None, None] * ht / s, (n_r - 1, n_t, s, s)).reshape(n - 1, s * s)
    return pts, areas


def build_disk_grid(n_r: int, n_theta: int) -> Grid:
    """Polar grid of the unit disk.

    Parameters
    ----------
    n_r : int
        Number of radial levels including the center (``n_r >= 2``).
    n_theta : int
        Nodes per ring (``n_theta >= 4``).

    Returns
    -------
    Grid
        Boundary = outer ring, with radial unit normals.
    """
    if int(n_r) != n_r or n_r < 2:
        raise ValueError(f"n_r={n_r}: need an integer n_r >= 2 for a usable disk grid")
    if int(n_theta) != n_theta or n_theta < 4:
        raise ValueError(f"n_theta={n_theta}: need an integer n_theta >= 4 for a usable disk grid")
    n_r, n_theta = int(n_r), int(n_theta)
    hr = 1.0 / (n_r - 1)
    ht = 2.0 * np.pi / n_theta
    th = np.arange(n_theta) * ht
    r = np.arange(1, n_r) * hr
    R_, T_ = np.meshgrid(r, th, indexing="ij")
    pts = np.vstack([[0.0, 0.0], np.column_stack([(R_ * np.cos(T_)).ravel(), (R_ * np.sin(T_)).ravel()])])
    # snap the boundary ring exactly onto the unit circle
    N = pts.shape[0]
    boundary = np.arange(N - n_theta, N)
    pts[boundary] = np.column_stack([np.cos(th), np.sin(th)])
    interior = np.arange(0, N - n_theta)
    normals = pts[boundary].copy()
    # exact annular-sector areas
    vol = np.empty(N)
    vol[0] = np.pi * (hr / 2) ** 2
    r_lo = (np.arange(1, n_r) - 0.5) * hr
    r_hi = np.minimum((np.arange(1, n_r) + 0.5) * hr, 1.0)
    ring_area = 0.5 * (r_hi**2 - r_lo**2) * ht
    vol[1:] = np.repeat(ring_area, n_theta)
    face = np.full(n_theta, ht)
    cells = _disk_cells(n_r, n_theta, hr)
    return Grid(
        kind="disk",
        h=hr,
        points=pts,
        interior=interior,
        boundary=boundary,
        normals=normals,
        shape=(n_r, n_theta),
        R=1.0,
        dirichlet=np.zeros(0, dtype=int),
        volumes=vol,
        face=face,
        _cells=cells,
    )


def build_halfspace_grid(R: float, h: float) -> Grid:
    """Uniform grid of the rectangle ``[-R, R] x [0, R]``.

    Parameters
    ----------
    R : float
        Half-width (and height) of the rectangle.
    h : float
        Spacing; ``R / h`` must be an integer and ``h <= R / 4``.
    """
    R, h = float(R), float(h)
    if not (R > 0 and h > 0):
        raise ValueError("R and h must be positive")
    if h > R / 4 + 1e-12:
        raise ValueError(f"h={h} is too coarse for R={R}: need h <= R/4")
    m = R / h
    if abs(m - round(m)) > 1e-9:
        raise ValueError(f"R/h = {m} must be an integer")
    m = int(round(m))
    nx, ny = 2 * m + 1, m + 1
    xs = -R + h * np.arange(nx)
    ys = h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange(nx * ny).reshape(nx, ny)
    boundary = idx[:, 0].copy()
    interior = idx[:, 1:].ravel()
    walls = np.unique(np.concatenate([idx[0, 1:], idx[-1, 1:], idx[1:-1, -1]]))
    normals = np.tile([0.0, -1.0], (nx, 1))
    wx = np.full(nx, h)
    wx[[0, -1]] = h / 2
    wy = np.full(ny, h)
    wy[[0, -1]] = h / 2
    vol = np.outer(wx, wy).ravel()
    face = wx.copy()
    # sub-samples of the clipped cells
    s = _SUB
    fr = (np.arange(s) + 0.5) / s
    xlo = np.maximum(X - h / 2, -R)
    xhi = np.minimum(X + h / 2, R)
    ylo = np.maximum(Y - h / 2, 0.0)
    yhi = np.minimum(Y + h / 2, R)
    sx = xlo.ravel()[:, None] + fr[None, :] * (xhi - xlo).ravel()[:, None]
    sy = ylo.ravel()[:, None] + fr[None, :] * (yhi - ylo).ravel()[:, None]
    spts = np.stack(
        [np.repeat(sx, s, axis=1), np.tile(sy, (1, s))], axis=-1
    )
    sareas = np.repeat(((xhi - xlo) * (yhi - ylo)).ravel()[:, None] / (s * s), s * s, axis=1)
    return Grid(
        kind="halfspace",
        h=h,
        points=pts,
        interior=interior,
        boundary=boundary,
        normals=normals,
        shape=(nx, ny),
        R=R,
        dirichlet=walls,
        volumes=vol,
        face=face,
        _cells=(spts, sareas),
    )


# ----------------------------------------------------------------------
# charts


@dataclass(frozen=True, eq=False)
class FlattenedChart:
    """Coefficient data of a boundary chart ``x_2 = phi(x_1)`` flattened to ``y_2 = 0``.

    ``a[k]`` is the 2x2 matrix ``[[1, -phi'], [-phi', phi'^2 + 1]]`` at node ``k``
    and ``phi_tilde = 1 / sqrt(phi'^2 + 1)``, both constant in ``x_2``.
    """

    phi: np.ndarray
    dphi: np.ndarray
    a: np.ndarray
    phi_tilde: np.ndarray

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.dphi == 0.0))

    def eigen_bounds(self) -> tuple[float, float]:
        """Smallest and largest eigenvalue of ``a`` over all nodes."""
        tr = self.a[:, 0, 0] + self.a[:, 1, 1]
        det = self.a[:, 0, 0] * self.a[:, 1, 1] - self.a[:, 0, 1] ** 2
        disc = np.sqrt(np.maximum(tr**2 / 4 - det, 0.0))
        return float(np.min(tr / 2 - disc)), float(np.max(tr / 2 + disc))


def chart_condition_bound(Lambda: float) -> float:
    """Largest ``|phi'|`` for which the chart matrix stays in ``[1/Lambda, Lambda]``.

    The matrix has determinant 1, so its eigenvalues are ``mu`` and ``1/mu``
    with ``mu + 1/mu = 2 + phi'^2``. Requiring ``mu <= Lambda`` gives
    ``|phi'| <= (Lambda - 1) / sqrt(Lambda)``.
    """
    return (Lambda - 1.0) / np.sqrt(Lambda)


def build_chart(phi: Callable | float | None, grid: Grid, dphi: Callable | None = None) -> FlattenedChart:
    """Sample a flattened chart on every grid node.

    Parameters
    ----------
    phi : callable or float or None
        Boundary graph ``phi(x_1)``. ``None`` or ``0`` gives the identity chart.
        An object with a ``derivative(var)`` method (see :mod:`bdlab.expr`)
        supplies its own derivative.
    grid : Grid
    dphi : callable, optional
        Derivative of ``phi``. If omitted it is taken from ``phi.derivative``
        or from a centered difference with step ``1e-6``.
    """
    x1 = grid.points[:, 0]
    if phi is None or (np.isscalar(phi) and float(phi) == 0.0):
        p = np.zeros_like(x1)
        d = np.zeros_like(x1)
    else:
        if np.isscalar(phi):
            p = np.full_like(x1, float(phi))
            d = np.zeros_like(x1)
        else:
            p = np.broadcast_to(np.asarray(phi(x1), dtype=float), x1.shape).copy()
            if dphi is None and hasattr(phi, "derivative"):
                dphi = phi.derivative("x1")
            if dphi is None:
                eps = 1e-6
                d = (np.asarray(phi(x1 + eps)) - np.asarray(phi(x1 - eps))) / (2 * eps)
            else:
                d = np.broadcast_to(np.asarray(dphi(x1), dtype=float), x1.shape).copy()
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(d))):
        raise ValueError("chart descriptor evaluated to non-finite values")
    a = np.empty((x1.size, 2, 2))
    a[:, 0, 0] = 1.0
    a[:, 0, 1] = a[:, 1, 0] = -d
    a[:, 1, 1] = d**2 + 1.0
    return FlattenedChart(phi=p, dphi=d, a=a, phi_tilde=1.0 / np.sqrt(d**2 + 1.0))


# ----------------------------------------------------------------------
# cylinders


def time_weights(times: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Length of ``[t_m - tau/2, t_m + tau/2] ∩ [t_0, t_M] ∩ (lo, hi)`` per stamp.

    For an interval aligned with the stamps this is the trapezoid rule.
    """
    t = np.asarray(times, dtype=float)
    if t.size == 1:
        return np.zeros(1)
    tau = t[1] - t[0]
    a = np.maximum(np.maximum(t - tau / 2, t[0]), lo)
    b = np.minimum(np.minimum(t + tau / 2, t[-1]), hi)
    return np.clip(b - a, 0.0, None)


@dataclass(frozen=True, eq=False)
class Cylinder:
    """Space-time cylinder ``B_rho(x0) x (t0 - rho, t0 + rho)`` carved from a grid.

    Index sets follow the open predicates (``|x - x0| < rho``, times strictly
    inside). Quadrature weights are measures of cell ∩ cylinder, which equal
    trapezoid weights on grid-aligned cylinders.

    Attributes
    ----------
    rho : float
    center : tuple
        Spatial center (on the boundary).
    t_center : float
    interior_nodes, boundary_nodes : ndarray of int
        Node indices of ``Q_rho`` (off the boundary) and ``∂'Q_rho``.
    time_index : ndarray of int
        Stamps strictly inside ``I_rho``.
    w_int : ndarray, shape (N,)
        Cell areas inside the ball (zero on boundary nodes' neighbours outside).
    w_bnd : ndarray, shape (n_boundary,)
        Face lengths inside the ball.
    w_time : ndarray, shape (M,)
        Time weights.
    """

    rho: float
    center: tuple
    t_center: float
    interior_nodes: np.ndarray
    boundary_nodes: np.ndarray
    time_index: np.ndarray
    w_int: np.ndarray
    w_bnd: np.ndarray
    w_time: np.ndarray

    @property
    def interior_measure(self) -> float:
        return float(self.w_int.sum() * self.w_time.sum())

    @property
    def boundary_measure(self) -> float:
        return float(self.w_bnd.sum() * self.w_time.sum())


def cylinder_nodes(
    grid: Grid,
    times: np.ndarray,
    rho: float,
    center: tuple[float, float] = (0.0, 0.0),
    t_center: float = 0.0,
) -> Cylinder:
    """Carve ``Q_rho`` and ``∂'Q_rho`` out of a grid and a time axis.

    Parameters
    ----------
    grid : Grid
    times : ndarray
        Uniform time stamps of the trajectory.
    rho : float
        Radius; needs ``2 h <= rho <= R``.
    center : tuple, optional
        Spatial center, a boundary point (default origin).
    t_center : float, optional

    Raises
    ------
    ValueError
        If ``rho`` is below resolution, exceeds ``R``, the time axis does not
        cover ``(t_center - rho, t_center + rho)`` or a subset is empty.
    """
    rho = float(rho)
    times = np.asarray(times, dtype=float)
    if rho < 2 * grid.h - 1e-12:
        raise ValueError(f"rho={rho} is below resolution (need rho >= 2h = {2 * grid.h}); empty subset")
    if rho > grid.R + 1e-12:
        raise ValueError(f"rho={rho} exceeds the grid radius R={grid.R}")
    eps = 1e-9 * max(1.0, rho)
    if times[0] > t_center - rho + eps or times[-1] < t_center + rho - eps:
        raise ValueError(
            f"time axis [{times[0]}, {times[-1]}] does not cover ({t_center - rho}, {t_center + rho})"
        )
    c = np.asarray(center, dtype=float)
    d = np.linalg.norm(grid.points - c, axis=1)
    is_b = grid.is_boundary
    interior_nodes = np.flatnonzero((d < rho) & ~is_b)
    boundary_nodes = np.flatnonzero((d < rho) & is_b)
    time_index = np.flatnonzero(np.abs(times - t_center) < rho - eps)
    if interior_nodes.size == 0 or boundary_nodes.size == 0 or time_index.size == 0:
        raise ValueError(f"rho={rho}: empty cylinder subset at this resolution")
    w_int, w_bnd = grid.ball_weights(tuple(c), rho)
    w_time = time_weights(times, t_center - rho, t_center + rho)
    return Cylinder(
        rho=rho,
        center=(float(c[0]), float(c[1])),
        t_center=float(t_center),
        interior_nodes=interior_nodes,
        boundary_nodes=boundary_nodes,
        time_index=time_index,
        w_int=w_int,
        w_bnd=w_bnd,
        w_time=w_time,
    )
