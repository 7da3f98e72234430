"""Nonlinear boundary flow ``d_t (u^p) = -d_nu u - b u + f`` by fixed-point iteration.

The solution is written ``u = U0 + w`` with ``U0`` the harmonic extension of
the initial trace and ``w(., 0) = 0``. For a frozen iterate ``w`` and a
continuation parameter ``sigma`` the linear problem::

    c d_t psi = -d_nu psi - sigma (d_nu U0 + b (psi + U0) - f),
    c = sigma p (w + U0)^(p-1) + (1 - sigma),

is solved over the whole horizon by backward Euler (the coefficient is frozen
at the new stamp) and defines ``F(w) = psi``. Iterating ``F`` from ``w = 0``
until the sup-norm change is below the tolerance gives the solution at the
given ``sigma``. The normal derivative of ``U0`` is its discrete flux
``(K U0)_b / face``, which makes ``p = 1`` coincide with the linear stepper.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

from .elliptic import (
    DEFAULT_TOL,
    CoefficientBoundError,
    GridFunction,
    SolverError,
    assemble,
    conjugate_gradient,
    solve_dirichlet,
)
from .evolution import CoefficientField, Trajectory
from .expr import as_field
from .grid import Grid

__all__ = [
    "NonlinearConfig",
    "NonlinearResult",
    "PositivityReport",
    "BandViolation",
    "NonContraction",
    "harmonic_extension",
    "frozen_coefficient",
    "linearized_step",
    "fixed_point_solve",
    "sigma_continuation",
    "positivity_bounds",
]

log = logging.getLogger(__name__)


class BandViolation(CoefficientBoundError):
    """The frozen coefficient left ``[1/Lambda_hat, Lambda_hat]``; the horizon is too long."""


class NonContraction(SolverError):
    """The fixed-point iteration did not settle within ``max_iter`` sweeps."""


@dataclass(frozen=True)
class NonlinearConfig:
    """Knobs of the nonlinear solve.

    Attributes
    ----------
    p : float
        Exponent, positive.
    band : float
        ``Lambda_hat``; the frozen coefficient must stay in ``[1/band, band]``.
    tol : float
        Sup-norm change that ends the fixed-point iteration.
    max_iter : int
    sigma_schedule : tuple of float
        Monotone values in ``[0, 1]`` visited by :func:`sigma_continuation`.
    T, tau : float
        Horizon and step; ``T`` must be a multiple of ``tau``.
    cg_tol : float
        Relative residual of the inner linear solves.
    """

    p: float = 2.0
    band: float = 8.0
    tol: float = 1e-8
    max_iter: int = 60
    sigma_schedule: tuple = (0.0, 0.5, 1.0)
    T: float = 0.25
    tau: float = 1.0 / 128
    cg_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p={self.p}: need p > 0")
        if not self.band > 1:
            raise ValueError(f"band={self.band}: need band > 1")
        if not self.tol > 0:
            raise ValueError(f"tol={self.tol}: need tol > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        s = tuple(float(x) for x in self.sigma_schedule)
        if not s or any(x < 0 or x > 1 for x in s):
            raise ValueError("sigma_schedule must be a nonempty list of values in [0, 1]")
        if s[0] not in (0.0, 1.0) or any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("sigma_schedule must start at 0 or 1 and increase strictly")
        object.__setattr__(self, "sigma_schedule", s)
        steps = self.T / self.tau
        if not self.tau > 0 or abs(steps - round(steps)) > 1e-8 * max(1.0, steps) or round(steps) < 1:
            raise ValueError(f"T={self.T} must be a positive multiple of tau={self.tau}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.tau))


@dataclass(frozen=True)
class PositivityReport:
    """Range of ``u`` over the boundary and whether it leaves ``[1/band, band]``."""

    min: float
    max: float
    band: tuple
    violated: bool


@dataclass(frozen=True, eq=False)
class NonlinearResult:
    """Fixed point at one ``sigma``.

    Attributes
    ----------
    u : Trajectory
        ``U0 + psi``.
    psi : ndarray, shape (M, N)
    U0 : ndarray, shape (N,)
    iterations : int
    increments : list of float
        Sup-norm change of each sweep.
    sigma : float
    history : list
        Per-sigma ``(sigma, iterations)`` pairs for continuation runs.
    """

    u: Trajectory
    psi: np.ndarray
    U0: np.ndarray
    iterations: int
    increments: list
    sigma: float = 1.0
    history: list = field(default_factory=list)

    @property
    def contraction_ratios(self) -> np.ndarray:
        inc = np.asarray(self.increments)
        if inc.size < 2:
            return np.zeros(0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return inc[1:] / inc[:-1]


def _boundary_data(grid: Grid, u0) -> np.ndarray:
    if callable(u0) or isinstance(u0, str):
        g = as_field(u0)
        pb = grid.points[grid.boundary]
        return np.asarray(g(pb[:, 0], pb[:, 1], 0.0), dtype=float) * np.ones(pb.shape[0])
    arr = np.asarray(u0, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.boundary.size, float(arr))
    if arr.shape != (grid.boundary.size,):
        raise ValueError(f"u0 has shape {arr.shape}, expected ({grid.boundary.size},)")
    return arr


def harmonic_extension(grid: Grid, u0, tol: float = DEFAULT_TOL) -> GridFunction:
    """Harmonic ``U0`` with ``U0 = u0`` on the boundary.

    Raises
    ------
    ValueError
        If ``u0`` is not positive at every boundary node.
    """
    g = _boundary_data(grid, u0)
    if np.any(g <= 0):
        raise ValueError(f"u0 must be positive on the boundary (min {g.min():.6g})")
    return solve_dirichlet(assemble(grid), g, tol)


def frozen_coefficient(w_b: np.ndarray, U0_b: np.ndarray, sigma: float, p: float) -> np.ndarray:
    """``sigma p (w + U0)^(p-1) + (1 - sigma)`` at boundary nodes."""
    base = np.asarray(w_b) + np.asarray(U0_b)
    if p == 1.0:
        return np.ones_like(base)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = sigma * p * np.power(base, p - 1.0) + (1.0 - sigma)
    if sigma > 0 and np.any(base <= 0):
        c = np.where(base <= 0, np.nan, c)
    return c


class _Context:
    """Time-independent pieces shared by every linearized solve."""

    def __init__(self, grid: Grid, U0: np.ndarray, coeffs: CoefficientField, cfg: NonlinearConfig):
        if grid.dirichlet.size:
            raise ValueError("the nonlinear flow is posed on grids without artificial walls")
        self.grid = grid
        self.cfg = cfg
        self.coeffs = coeffs
        self.U0 = U0
        op = assemble(grid, 1.0)
        self.K = op.K.tocsr()
        self.b_idx = grid.boundary
        self.face = grid.face
        self.dnu_U0 = (self.K @ U0)[self.b_idx] / self.face
        self.times = cfg.tau * np.arange(cfg.n_steps + 1)
        pb = grid.points[self.b_idx]
        self.b = [np.asarray(coeffs.b(pb[:, 0], pb[:, 1], t), dtype=float) * np.ones(pb.shape[0]) for t in self.times]
        self.f = [np.asarray(coeffs.f(pb[:, 0], pb[:, 1], t), dtype=float) * np.ones(pb.shape[0]) for t in self.times]


def linearized_step(
    ctx: _Context,
    psi_old: np.ndarray,
    w_new: np.ndarray,
    m: int,
    sigma: float,
    guess: np.ndarray | None = None,
) -> np.ndarray:
    """One backward-Euler step of the frozen-coefficient problem, ending at stamp ``m``.

    Parameters
    ----------
    ctx : _Context
    psi_old : ndarray, shape (N,)
        ``psi`` at stamp ``m - 1``.
    w_new : ndarray, shape (N,)
        Frozen iterate at stamp ``m``.
    m : int
    sigma : float
    guess : ndarray, optional
        Starting point of conjugate gradients.

    Raises
    ------
    BandViolation
        If the frozen coefficient leaves ``[1/band, band]``.
    """
    cfg = ctx.cfg
    b = ctx.b_idx
    tau = cfg.tau
    c = frozen_coefficient(w_new[b], ctx.U0[b], sigma, cfg.p)
    lo, hi = 1.0 / cfg.band, cfg.band
    if not np.all(np.isfinite(c)) or c.min() < lo - 1e-12 or c.max() > hi + 1e-12:
        raise BandViolation(
            f"frozen coefficient ranges over [{np.nanmin(c):.6g}, {np.nanmax(c):.6g}] at t={ctx.times[m]:.6g}, "
            f"outside [{lo:.6g}, {hi:.6g}]; shorten the horizon T"
        )
    bm = ctx.b[m]
    diag = np.zeros(ctx.grid.n_nodes)
    diag[b] = ctx.face * (c / tau + sigma * bm)
    A = (ctx.K + sp.diags(diag)).tocsr()
    rhs = np.zeros(ctx.grid.n_nodes)
    rhs[b] = ctx.face * (c * psi_old[b] / tau + sigma * (ctx.f[m] - ctx.dnu_U0 - bm * ctx.U0[b]))
    x0 = psi_old if guess is None else guess
    return conjugate_gradient(A, rhs, cfg.cg_tol, x0=x0)


def _apply_map(ctx: _Context, w: np.ndarray, sigma: float, start: np.ndarray | None = None) -> np.ndarray:
    """``F(w)``: the full-horizon linearized solve from ``psi(0) = 0``."""
    M = ctx.times.size
    psi = np.zeros((M, ctx.grid.n_nodes))
    for m in range(1, M):
        guess = None if start is None else start[m]
        psi[m] = linearized_step(ctx, psi[m - 1], w[m], m, sigma, guess)
    return psi


def _iterate(ctx: _Context, sigma: float, w: np.ndarray) -> tuple[np.ndarray, int, list]:
    cfg = ctx.cfg
    increments = []
    for it in range(1, cfg.max_iter + 1):
        psi = _apply_map(ctx, w, sigma, start=w)
        change = float(np.max(np.abs(psi - w)))
        increments.append(change)
        w = psi
        log.debug("sigma=%g sweep %d change %.3e", sigma, it, change)
        if change <= cfg.tol:
            return w, it, increments
    raise NonContraction(
        f"fixed-point iteration at sigma={sigma} did not reach tol={cfg.tol} in {cfg.max_iter} sweeps "
        f"(last change {increments[-1]:.3e}); shorten the horizon T"
    )


def _result(ctx: _Context, psi: np.ndarray, it: int, inc: list, sigma: float, history=None) -> NonlinearResult:
    u = Trajectory(ctx.grid, ctx.times.copy(), psi + ctx.U0[None, :], {"tau": ctx.cfg.tau, "p": ctx.cfg.p, "sigma": sigma})
    return NonlinearResult(u, psi, ctx.U0, it, inc, sigma, list(history or []))


def _setup(grid: Grid, u0, cfg: NonlinearConfig, coeffs: CoefficientField | None) -> _Context:
    coeffs = CoefficientField() if coeffs is None else coeffs
    U0 = harmonic_extension(grid, u0, cfg.cg_tol).values
    return _Context(grid, U0, coeffs, cfg)


def fixed_point_solve(
    grid: Grid,
    u0: Any,
    cfg: NonlinearConfig,
    coeffs: CoefficientField | None = None,
    sigma: float = 1.0,
) -> NonlinearResult:
    """Iterate ``w -> F(w)`` from ``w = 0`` at a fixed ``sigma``.

    Parameters
    ----------
    grid : Grid
        Disk grid.
    u0 : number, descriptor, callable or boundary array
        Positive initial trace.
    cfg : NonlinearConfig
    coeffs : CoefficientField, optional
        Supplies ``b`` and ``f``; ``a`` is not used.
    sigma : float

    Raises
    ------
    NonContraction
        If ``cfg.max_iter`` sweeps do not reach ``cfg.tol``.
    BandViolation
        If an iterate drives the frozen coefficient out of the band.
    """
    ctx = _setup(grid, u0, cfg, coeffs)
    w0 = np.zeros((ctx.times.size, grid.n_nodes))
    psi, it, inc = _iterate(ctx, sigma, w0)
    return _result(ctx, psi, it, inc, sigma, [(sigma, it)])


def sigma_continuation(
    grid: Grid,
    u0: Any,
    cfg: NonlinearConfig,
    coeffs: CoefficientField | None = None,
) -> NonlinearResult:
    """Solve along ``cfg.sigma_schedule``, starting each ``sigma`` from the previous fixed point."""
    ctx = _setup(grid, u0, cfg, coeffs)
    w = np.zeros((ctx.times.size, grid.n_nodes))
    history = []
    it, inc = 0, []
    for sigma in cfg.sigma_schedule:
        w, it, inc = _iterate(ctx, sigma, w)
        history.append((sigma, it))
    return _result(ctx, w, it, inc, cfg.sigma_schedule[-1], history)


def positivity_bounds(traj: Trajectory, band: float | tuple = 8.0) -> PositivityReport:
    """Range of the boundary trace over all stamps against ``[lo, hi]``.

    ``band`` is either ``Lambda_hat`` (meaning ``[1/Lambda_hat, Lambda_hat]``)
    or an explicit pair.
    """
    lo, hi = (1.0 / band, float(band)) if np.isscalar(band) else (float(band[0]), float(band[1]))
    v = traj.boundary_values
    vmin, vmax = float(v.min()), float(v.max())
    return PositivityReport(vmin, vmax, (lo, hi), bool(vmin < lo or vmax > hi))
