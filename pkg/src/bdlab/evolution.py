"""Implicit time stepping of the linear boundary diffusion problem.

Global form on the disk::

    div(a grad v) = 0            in the disk,
    d_t v + a d_nu v + b v = f   on the circle.

Local form on the half-space rectangle, with a flattened chart ``A`` and
``phi_tilde``::

    div(a A grad u) = 0                                in x_2 > 0,
    d_t u + phi_tilde a (A grad u) . nu + b u = f      on x_2 = 0,

where ``nu = -e_2``, plus prescribed values on the artificial walls.

One backward-Euler step solves a single symmetric positive-definite system
for all non-wall nodes. With ``m = face / phi_tilde`` the boundary rows read
``m (v - v_old) / tau + (K v)_b + m b v = m f``, the remaining rows ``(K v) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
import scipy.sparse as sp

from .elliptic import DEFAULT_TOL, SparseOperator, assemble, conjugate_gradient
from .expr import as_field
from .grid import FlattenedChart, Grid, cylinder_nodes

__all__ = [
    "CoefficientField",
    "LinearProblem",
    "State",
    "Trajectory",
    "CompatReport",
    "step_linear",
    "run_linear",
    "initial_state",
    "check_compatibility",
    "steklov_average",
    "mode_coefficients",
    "fit_decay_rate",
]


def _evict(cache: dict, tag: str) -> None:
    """Drop time-stamped entries of one kind so long runs keep a bounded cache."""
    for k in [k for k in cache if k[0] == tag and k[-1] is not None]:
        del cache[k]


def _depends_on_time(g) -> bool:
    return bool(getattr(g, "depends_on_time", True))


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients ``a, b, f`` and the ellipticity bound ``Lambda``.

    Each coefficient is a number, descriptor text or a callable
    ``g(x1, x2, t)`` evaluated at the nodes.
    """

    a: Any = 1.0
    b: Any = 0.0
    f: Any = 0.0
    Lambda: float = 10.0

    def __post_init__(self):
        if not self.Lambda > 1:
            raise ValueError(f"Lambda={self.Lambda}: need Lambda > 1")
        for name in ("a", "b", "f"):
            object.__setattr__(self, name, as_field(getattr(self, name)))

    def sample(self, name: str, grid: Grid, t: float, nodes: np.ndarray | None = None) -> np.ndarray:
        pts = grid.points if nodes is None else grid.points[nodes]
        return np.asarray(getattr(self, name)(pts[:, 0], pts[:, 1], t), dtype=float)

    def time_dependent(self, name: str) -> bool:
        return _depends_on_time(getattr(self, name))


@dataclass(frozen=True)
class State:
    """Nodal values at time ``t``."""

    t: float
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class LinearProblem:
    """Data of a linear run.

    Attributes
    ----------
    grid : Grid
    coeffs : CoefficientField
    v0 : number, descriptor or callable
        Initial boundary data; interior values at ``t0`` are its a-harmonic
        extension.
    chart : FlattenedChart, optional
        Half-space only.
    wall : callable, optional
        ``wall(x1, x2, t)`` on the artificial walls; zero when omitted.
    t0, tau, tol : float
    """

    grid: Grid
    coeffs: CoefficientField = field(default_factory=CoefficientField)
    v0: Any = 0.0
    chart: FlattenedChart | None = None
    wall: Any = None
    t0: float = 0.0
    tau: float = 1.0 / 128
    tol: float = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau={self.tau} must be positive")
        object.__setattr__(self, "v0", as_field(self.v0))
        if self.wall is not None:
            object.__setattr__(self, "wall", as_field(self.wall))

    @property
    def phi_tilde(self) -> np.ndarray:
        b = self.grid.boundary
        return np.ones(b.size) if self.chart is None else self.chart.phi_tilde[b]

    def wall_values(self, t: float) -> np.ndarray:
        w = self.grid.dirichlet
        if w.size == 0 or self.wall is None:
            return np.zeros(w.size)
        p = self.grid.points[w]
        return np.asarray(self.wall(p[:, 0], p[:, 1], t), dtype=float)

    def operator(self, t: float) -> SparseOperator:
        key = ("op", float(t) if self.coeffs.time_dependent("a") else None)
        op = self._cache.get(key)
        if op is None:
            a = self.coeffs.sample("a", self.grid, t)
            op = assemble(self.grid, a, self.chart, self.coeffs.Lambda)
            _evict(self._cache, "op")
            self._cache[key] = op
        return op


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-indexed nodal values with cached derivative fields.

    Attributes
    ----------
    grid : Grid
    times : ndarray, shape (M,)
        Uniformly spaced stamps.
    values : ndarray, shape (M, N)
    meta : dict
        Free-form description of the run (echoed in reports).
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or self.values.shape != (t.size, self.grid.n_nodes):
            raise ValueError("values must have shape (len(times), n_nodes)")
        if t.size > 1:
            d = np.diff(t)
            if np.any(d <= 0) or np.ptp(d) > 1e-9 * max(1.0, abs(d[0])):
                raise ValueError("time stamps must be strictly increasing with constant step")

    @property
    def tau(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def boundary_values(self) -> np.ndarray:
        return self.values[:, self.grid.boundary]

    @cached_property
    def dt(self) -> np.ndarray:
        """Discrete ``d_t u``: centered differences, second-order one-sided at the ends."""
        if self.times.size < 3:
            raise ValueError("need at least three stamps for a time derivative")
        return np.gradient(self.values, self.times, axis=0, edge_order=2)

    @cached_property
    def gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """Discrete spatial gradient ``(d_1 u, d_2 u)`` at every stamp."""
        return self.grid.spatial_gradient(self.values)

    def scaled(self, c: float) -> "Trajectory":
        return Trajectory(self.grid, self.times, c * self.values, dict(self.meta))

    def harmonic_residual(self, op: SparseOperator) -> float:
        """Largest relative residual of the elliptic rows over all stamps."""
        f = op.free
        r = (op.K @ self.values.T)[f]
        scale = max(np.max(np.abs(self.values)), 1e-300) * np.max(np.abs(op.K.diagonal()))
        return float(np.max(np.abs(r)) / scale)

    def to_csv(self, path, nodes: np.ndarray | None = None) -> None:
        """Write one row per (time index, node) with columns ``t,x1,x2,on_boundary,value``.

        Rows are ordered by time, then node; floats use ``repr`` so values
        round-trip exactly. ``nodes`` restricts the dump to a node subset.
        """
        idx = np.arange(self.grid.n_nodes) if nodes is None else np.asarray(nodes)
        pts = self.grid.points[idx]
        onb = self.grid.is_boundary[idx].astype(int)
        fixed = [f"{float(x)!r},{float(y)!r},{b}" for (x, y), b in zip(pts, onb)]
        with open(path, "w", newline="") as fh:
            fh.write("t,x1,x2,on_boundary,value\n")
            for m, t in enumerate(self.times):
                tr = repr(float(t))
                row = self.values[m, idx]
                fh.write("".join(f"{tr},{c},{float(v)!r}\n" for c, v in zip(fixed, row)))


# ----------------------------------------------------------------------
# stepping


def _boundary_mass(problem: LinearProblem) -> np.ndarray:
    return problem.grid.face / problem.phi_tilde


def _unknowns(grid: Grid) -> np.ndarray:
    mask = np.ones(grid.n_nodes, dtype=bool)
    mask[grid.dirichlet] = False
    return np.flatnonzero(mask)


def _step_matrix(problem: LinearProblem, t: float, tau: float):
    """System matrix, wall coupling block and operator for a step ending at ``t``."""
    varying = problem.coeffs.time_dependent("a") or problem.coeffs.time_dependent("b")
    key = ("step", float(tau), float(t) if varying else None)
    hit = problem._cache.get(key)
    if hit is not None:
        return hit
    grid = problem.grid
    op = problem.operator(t)
    U = _unknowns(grid)
    pos = np.full(grid.n_nodes, -1)
    pos[U] = np.arange(U.size)
    b = problem.coeffs.sample("b", grid, t, grid.boundary)
    diag = np.zeros(U.size)
    diag[pos[grid.boundary]] = _boundary_mass(problem) * (1.0 / tau + b)
    KU = op.K[U]
    A = (KU[:, U] + sp.diags(diag)).tocsr()
    KW = KU[:, grid.dirichlet].tocsr()
    _evict(problem._cache, "step")
    problem._cache[key] = (A, KW, op)
    return A, KW, op


def step_linear(problem: LinearProblem, state: State, tau: float | None = None, guess: np.ndarray | None = None) -> State:
    """One backward-Euler step of the coupled interior/boundary system.

    Parameters
    ----------
    problem : LinearProblem
    state : State
        Values at ``state.t``.
    tau : float, optional
        Step size; ``problem.tau`` by default.
    guess : ndarray, optional
        Initial iterate for conjugate gradients (defaults to ``state.values``).

    Returns
    -------
    State
        Values at ``state.t + tau``.
    """
    tau = problem.tau if tau is None else float(tau)
    if not tau > 0:
        raise ValueError("tau must be positive")
    grid = problem.grid
    t1 = state.t + tau
    A, KW, op = _step_matrix(problem, t1, tau)
    U = _unknowns(grid)
    pos = np.full(grid.n_nodes, -1)
    pos[U] = np.arange(U.size)
    b = grid.boundary
    f = problem.coeffs.sample("f", grid, t1, b)
    m = _boundary_mass(problem)
    rhs = np.zeros(U.size)
    rhs[pos[b]] = m * (state.values[b] / tau + f)
    full = np.zeros(grid.n_nodes)
    if grid.dirichlet.size:
        full[grid.dirichlet] = problem.wall_values(t1)
        rhs -= KW @ full[grid.dirichlet]
    x0 = state.values[U] if guess is None else guess[U]
    full[U] = conjugate_gradient(A, rhs, problem.tol, x0=x0)
    return State(t1, full)


def initial_state(problem: LinearProblem) -> State:
    """Boundary data ``v0`` at ``t0`` with its a-harmonic extension inside."""
    from .elliptic import solve_dirichlet

    grid = problem.grid
    pb = grid.points[grid.boundary]
    g = np.asarray(problem.v0(pb[:, 0], pb[:, 1], problem.t0), dtype=float)
    op = problem.operator(problem.t0)
    U = solve_dirichlet(op, g, problem.tol, wall=problem.wall_values(problem.t0))
    return State(problem.t0, U.values)


def run_linear(problem: LinearProblem, T: float) -> Trajectory:
    """Run ``M = T / tau`` backward-Euler steps from ``problem.t0``.

    Raises
    ------
    ValueError
        If ``T`` is not an integer multiple of ``tau``.
    """
    tau = problem.tau
    M = T / tau
    if abs(M - round(M)) > 1e-8 * max(1.0, M):
        raise ValueError(f"T={T} is not a multiple of tau={tau}")
    M = int(round(M))
    state = initial_state(problem)
    vals = np.empty((M + 1, problem.grid.n_nodes))
    vals[0] = state.values
    for m in range(M):
        # linear extrapolation of the last two stamps as the CG starting point
        guess = 2.0 * vals[m] - vals[m - 1] if m > 0 else None
        state = step_linear(problem, state, tau, guess)
        vals[m + 1] = state.values
    times = problem.t0 + tau * np.arange(M + 1)
    meta = {"tau": tau, "h": problem.grid.h, "kind": problem.grid.kind}
    return Trajectory(problem.grid, times, vals, meta)


# ----------------------------------------------------------------------
# diagnostics


def mode_coefficients(traj: Trajectory, k: int) -> np.ndarray:
    """Cosine coefficient of ``cos(k theta)`` in the boundary trace at every stamp (disk)."""
    if traj.grid.kind != "disk":
        raise ValueError("mode coefficients are defined on disk trajectories")
    th = traj.grid.theta[traj.grid.boundary]
    n = th.size
    w = 2.0 / n if k > 0 else 1.0 / n
    return traj.boundary_values @ np.cos(k * th) * w


def fit_decay_rate(times: np.ndarray, coeff: np.ndarray) -> float:
    """Least-squares rate ``lambda`` in ``coeff ~ c exp(-lambda t)``."""
    y = np.log(np.abs(coeff))
    slope = np.polyfit(times, y, 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class CompatReport:
    """Both sides of the compatible interior energy condition on ``Q_rho``.

    ``ratio`` is ``None`` and ``flag`` is ``"degenerate"`` when the
    denominator vanishes while the numerator does not.
    """

    numerator: float
    denominator: float
    ratio: float | None
    rho: float
    flag: str = ""


def _default_t_center(times: np.ndarray, rho: float) -> float:
    if times[0] <= -rho + 1e-12 and times[-1] >= rho - 1e-12:
        return 0.0
    return float(0.5 * (times[0] + times[-1]))


def check_compatibility(
    traj: Trajectory,
    rho: float,
    center: tuple[float, float] = (0.0, 0.0),
    t_center: float | None = None,
) -> CompatReport:
    """Ratio ``∫|u_t|^2 / (∫|D_x u|^2 + rho^-2 ∫u^2)`` over ``Q_rho``.

    The cylinder is centered at the boundary point ``center`` and at time
    ``t_center`` (``0`` when the time axis covers ``(-rho, rho)``, the middle
    of the axis otherwise).
    """
    from .norms import cyl_integral

    tc = _default_t_center(traj.times, rho) if t_center is None else t_center
    cyl = cylinder_nodes(traj.grid, traj.times, rho, center, tc)
    num = cyl_integral(traj, cyl, "ut2", "interior")
    den = cyl_integral(traj, cyl, "grad2", "interior") + rho**-2 * cyl_integral(traj, cyl, "u2", "interior")
    if den > 0:
        return CompatReport(num, den, num / den, rho)
    if num == 0:
        return CompatReport(num, den, 0.0, rho, "trivial")
    return CompatReport(num, den, None, rho, "degenerate")


def steklov_average(traj: Trajectory, h_s: float) -> Trajectory:
    """Forward running mean ``(1/h_s) ∫_t^{t+h_s} u`` by the trapezoid rule.

    The result is defined on the stamps ``t_m`` with ``t_m + h_s <= t_M``.

    Raises
    ------
    ValueError
        If ``h_s`` is not a positive multiple of ``tau`` or reaches the span.
    """
    tau = traj.tau
    s = h_s / tau
    if h_s <= 0 or abs(s - round(s)) > 1e-8 * max(1.0, s):
        raise ValueError(f"h_s={h_s} must be a positive multiple of tau={tau}")
    s = int(round(s))
    M = traj.times.size
    if s >= M - 1:
        raise ValueError(f"h_s={h_s} exceeds the trajectory span")
    c = np.concatenate([np.zeros((1, traj.grid.n_nodes)), np.cumsum(traj.values, axis=0)])
    # sum_{j=m}^{m+s} u_j - (u_m + u_{m+s}) / 2
    n_out = M - s
    total = c[s + 1 : s + 1 + n_out] - c[:n_out]
    trap = total - 0.5 * (traj.values[:n_out] + traj.values[s : s + n_out])
    avg = trap * tau / h_s
    return Trajectory(traj.grid, traj.times[:n_out].copy(), avg, dict(traj.meta, steklov=h_s))
