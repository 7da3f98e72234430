"""Shipped test problems with closed-form solutions.

Each builder returns a ready-to-run :class:`~bdlab.evolution.LinearProblem`
together with the exact solution (when there is one) so that checks and
convergence studies can measure errors directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy

from .evolution import CoefficientField, LinearProblem, Trajectory, run_linear
from .grid import build_disk_grid, build_halfspace_grid

__all__ = [
    "ExactProblem",
    "halfspace_mode",
    "disk_mode",
    "halfspace_forced",
    "ManufacturedFlow",
    "manufactured_flow",
    "solve",
]


@dataclass(frozen=True)
class ExactProblem:
    """A linear problem, its horizon ``T`` and (optionally) the exact field."""

    problem: LinearProblem
    T: float
    exact: Callable | None = None
    name: str = ""

    def error(self, traj: Trajectory, nodes: np.ndarray | None = None) -> float:
        """Sup error over all stamps on ``nodes`` (all nodes by default)."""
        if self.exact is None:
            raise ValueError(f"problem {self.name!r} has no exact solution")
        p = traj.grid.points if nodes is None else traj.grid.points[nodes]
        ex = np.array([self.exact(p[:, 0], p[:, 1], t) for t in traj.times])
        got = traj.values if nodes is None else traj.values[:, nodes]
        return float(np.max(np.abs(got - ex)))


def halfspace_mode(
    h: float,
    tau: float,
    k: float = np.pi,
    R: float = 1.0,
    t0: float = -1.0,
    T: float = 2.0,
    amplitude: float = 1.0,
    drift: float = 0.0,
    tol: float = 1e-10,
) -> ExactProblem:
    """``u = A exp(-k x2) cos(k x1) exp(-k t) + drift t`` on ``[-R, R] x [0, R]``.

    The mode is harmonic and satisfies ``d_t u - d_2 u = 0`` on ``x2 = 0``, so
    with ``a = 1``, ``b = 0`` the field solves the local problem with constant
    data ``f = drift``; the walls carry its exact values.
    """

    def exact(x1, x2, t):
        x1, x2, t = np.asarray(x1), np.asarray(x2), np.asarray(t)
        return amplitude * np.exp(-k * x2) * np.cos(k * x1) * np.exp(-k * t) + drift * t

    grid = build_halfspace_grid(R, h)
    coeffs = CoefficientField(f=float(drift))
    prob = LinearProblem(grid, coeffs, v0=exact, wall=exact, t0=t0, tau=tau, tol=tol)
    return ExactProblem(prob, T, exact, "halfspace-mode")


def disk_mode(
    n_r: int,
    n_theta: int,
    tau: float,
    k: int = 1,
    b: float = 0.0,
    T: float = 1.0,
    amplitude: float = 1.0,
    tol: float = 1e-10,
) -> ExactProblem:
    """``v = A r^k cos(k theta) exp(-(k + b) t)`` on the unit disk with ``a = 1``."""

    def exact(x1, x2, t):
        x1 = np.asarray(x1)
        x2 = np.asarray(x2)
        r = np.hypot(x1, x2)
        th = np.arctan2(x2, x1)
        return amplitude * r**k * np.cos(k * th) * np.exp(-(k + b) * np.asarray(t))

    grid = build_disk_grid(n_r, n_theta)
    prob = LinearProblem(grid, CoefficientField(b=b), v0=exact, t0=0.0, tau=tau, tol=tol)
    return ExactProblem(prob, T, exact, f"disk-mode-{k}")


def halfspace_forced(
    h: float,
    tau: float,
    variable: bool = True,
    R: float = 1.0,
    t0: float = -1.0,
    T: float = 2.0,
    tol: float = 1e-10,
) -> ExactProblem:
    """Smooth forcing ``f = cos(x1) exp(-t) / 2`` with zero walls.

    The initial trace is ``cos(pi x1 / 2)``. With ``variable`` the
    coefficient is ``a = 1 + sin(x1) cos(t) / 4``, otherwise ``a = 1``. No
    closed form is known; the problem feeds the refinement-stability checks.
    """
    a = "1 + 0.25*sin(x1)*cos(t)" if variable else 1.0
    coeffs = CoefficientField(a=a, f="0.5*cos(x1)*exp(-t)", Lambda=2.0)
    grid = build_halfspace_grid(R, h)
    prob = LinearProblem(grid, coeffs, v0="cos(pi*x1/2)", wall=None, t0=t0, tau=tau, tol=tol)
    name = "halfspace-variable" if variable else "halfspace-forced"
    return ExactProblem(prob, T, None, name)


@dataclass(frozen=True)
class ManufacturedFlow:
    """Exact solution and forcing of the nonlinear flow on the unit disk.

    ``u*`` is harmonic for every ``t``; ``u0`` is its trace at ``t = 0`` and
    ``coeffs`` carries ``b`` and the symbolically derived ``f``.
    """

    p: float
    b: float
    u0: str
    exact: Callable
    coeffs: CoefficientField

    def error(self, traj: Trajectory) -> float:
        """Sup error over the boundary trace at every stamp."""
        pb = traj.grid.points[traj.grid.boundary]
        ex = np.array([self.exact(pb[:, 0], pb[:, 1], t) for t in traj.times])
        return float(np.max(np.abs(traj.boundary_values - ex)))


def manufactured_flow(p: float, b: float = 0.0, Lambda: float = 8.0) -> ManufacturedFlow:
    """``u* = 2 + t/10 + exp(-t) r cos(theta) / 2`` with ``f = d_t(u*^p) + d_nu u* + b u*``.

    On the unit circle ``d_nu = d_r``; the forcing is built with sympy and
    handed to the solver as descriptor text.
    """
    r, th, t = sympy.symbols("r theta t", real=True)
    g0 = 2 + sympy.Rational(1, 10) * t
    g1 = sympy.Rational(1, 2) * sympy.exp(-t)
    u = g0 + g1 * r * sympy.cos(th)
    pp = sympy.nsimplify(p)
    f = sympy.diff(u**pp, t) + sympy.diff(u, r) + sympy.nsimplify(b) * u
    f_text = str(f.subs(r, 1))
    u0_text = str(u.subs(t, 0))
    u_fn = sympy.lambdify((r, th, t), u, "numpy")

    def exact(x1, x2, tt):
        x1 = np.asarray(x1)
        x2 = np.asarray(x2)
        return u_fn(np.hypot(x1, x2), np.arctan2(x2, x1), np.asarray(tt)) * np.ones(np.broadcast(x1, x2).shape)

    coeffs = CoefficientField(b=float(b), f=f_text, Lambda=Lambda)
    return ManufacturedFlow(float(p), float(b), u0_text, exact, coeffs)


def solve(ep: ExactProblem) -> Trajectory:
    """Run the problem over its horizon."""
    return run_linear(ep.problem, ep.T)
