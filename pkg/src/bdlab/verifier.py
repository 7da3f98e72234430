"""Both sides of the local and global estimates on computed trajectories.

Each check returns an :class:`InequalityReport` holding the left side, the
right side without its unknown constant and their quotient, the empirical
constant. Cutoff functions used in proofs are not modelled: only the
statement-level quantities are evaluated.

Identifiers
-----------
``CACC1``, ``CACC2``, ``CACC3``
    The three Caccioppoli inequalities of the homogeneous constant-coefficient
    problem on ``Q_rho`` and ``Q_R``.
``COMPAT_E``
    The compatible interior energy condition on ``Q_rho``.
``ITER_DECAY``
    Decay of the mean-oscillation excess ``E(rho) <= C (rho/R)^2 E(R)``.
``NONHOM_ITER``
    H1-seminorm decay with source terms and its comparison-polynomial form.
``MORREY_EST``
    Morrey bound of the derivatives.
``SCHAUDER_LOCAL``, ``SCHAUDER_GLOBAL``
    The C^{1+alpha} estimate on a boundary cylinder and on the whole disk.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import norms
from .evolution import Trajectory, check_compatibility
from .grid import build_chart, build_halfspace_grid, cylinder_nodes, time_weights

__all__ = [
    "IDS",
    "InequalityReport",
    "VerificationError",
    "check_caccioppoli_I",
    "check_caccioppoli_II",
    "check_caccioppoli_III",
    "check_compat",
    "check_iteration_decay",
    "check_nonhom_iteration",
    "check_morrey_estimate",
    "check_schauder_local",
    "check_schauder_global",
    "ChartCover",
    "arc_cover",
    "with_history",
    "oscillation_excess",
    "run_verification_suite",
]

IDS = (
    "CACC1",
    "CACC2",
    "CACC3",
    "COMPAT_E",
    "ITER_DECAY",
    "MORREY_EST",
    "NONHOM_ITER",
    "SCHAUDER_GLOBAL",
    "SCHAUDER_LOCAL",
)


class VerificationError(ValueError):
    """A check was called outside its stated range; ``check_id`` names it."""

    def __init__(self, check_id: str, message: str):
        super().__init__(f"{check_id}: {message}")
        self.check_id = check_id


@dataclass
class InequalityReport:
    """Outcome of one inequality check.

    Attributes
    ----------
    id : str
    lhs, rhs : float
        Left side and right side without the constant; both nonnegative.
    ratio : float or None
        ``lhs / rhs``; ``None`` when ``rhs == 0``.
    meta : dict
        Check-specific numbers such as radii and resolution.
    history : list of dict
        One entry per refinement level (coarse to fine) when the report
        aggregates a ladder.
    flag : str
        ``""``, ``"trivial"`` (both sides vanish) or ``"violated"`` (left side
        positive with a vanishing right side).
    """

    id: str
    lhs: float
    rhs: float
    ratio: float | None
    meta: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    flag: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def drift(self) -> float | None:
        """Largest relative change of the ratio between consecutive levels."""
        r = [h["ratio"] for h in self.history if h.get("ratio") is not None]
        if len(r) < 2:
            return None
        return float(max(abs(b - a) / abs(a) for a, b in zip(r, r[1:]) if a != 0))


def _report(check_id: str, lhs: float, rhs: float, meta: dict) -> InequalityReport:
    lhs, rhs = float(lhs), float(rhs)
    if rhs > 0:
        return InequalityReport(check_id, lhs, rhs, lhs / rhs, meta)
    if lhs == 0:
        return InequalityReport(check_id, lhs, rhs, None, meta, flag="trivial")
    return InequalityReport(check_id, lhs, rhs, None, meta, flag="violated")


def _resolution(traj: Trajectory) -> dict:
    return {"h": float(traj.grid.h), "tau": float(traj.tau)}


def with_history(reports: Sequence[InequalityReport]) -> InequalityReport:
    """Finest-level report carrying the whole ladder as history."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to aggregate")
    ids = {r.id for r in reports}
    if len(ids) != 1:
        raise ValueError(f"cannot aggregate different checks {sorted(ids)}")
    last = reports[-1]
    hist = [dict(r.meta, lhs=r.lhs, rhs=r.rhs, ratio=r.ratio) for r in reports]
    out = InequalityReport(last.id, last.lhs, last.rhs, last.ratio, dict(last.meta), hist, last.flag)
    d = out.drift
    if d is not None:
        out.meta["drift"] = d
    return out


# ----------------------------------------------------------------------
# Caccioppoli inequalities


def _gap_check(check_id: str, rho: float, R: float, limit: float, label: str) -> None:
    if not (0 < rho < R):
        raise VerificationError(check_id, f"need 0 < rho < R, got rho={rho}, R={R}")
    if rho > limit * R + 1e-12:
        raise VerificationError(check_id, f"precondition rho <= {label} violated (rho={rho}, R={R})")


def _cylinders(traj, rho, R, center, t_center):
    small = cylinder_nodes(traj.grid, traj.times, rho, center, t_center)
    large = cylinder_nodes(traj.grid, traj.times, R, center, t_center)
    return small, large


def check_caccioppoli_I(traj: Trajectory, rho: float, R: float, center=(0.0, 0.0), t_center: float = 0.0) -> InequalityReport:
    """``sup_I ∫_{∂'B_rho} u^2 + ∫_{Q_rho} |D_x u|^2`` against
    ``(R - rho)^-2 ∫_{Q_R} u^2 + (R - rho)^-1 ∫_{∂'Q_R} u^2``.

    Raises
    ------
    VerificationError
        Unless ``rho <= 0.9 R``.
    """
    _gap_check("CACC1", rho, R, 0.9, "0.9 R")
    s, L = _cylinders(traj, rho, R, center, t_center)
    g = R - rho
    lhs = norms.cyl_integral(traj, s, "u2", "boundary", sup=True) + norms.cyl_integral(traj, s, "grad2", "interior")
    rhs = g**-2 * norms.cyl_integral(traj, L, "u2", "interior") + g**-1 * norms.cyl_integral(traj, L, "u2", "boundary")
    return _report("CACC1", lhs, rhs, dict(_resolution(traj), rho=rho, R=R))


def _energy_rhs(traj, L, g) -> float:
    return (norms.cyl_integral(traj, L, "grad2", "interior") + norms.cyl_integral(traj, L, "ut2", "interior")) / g


def check_caccioppoli_II(traj: Trajectory, rho: float, R: float, center=(0.0, 0.0), t_center: float = 0.0) -> InequalityReport:
    """``sup_I ∫_{B_rho} |D_x u|^2 + ∫_{∂'Q_rho} |D_x u|^2`` against
    ``(R - rho)^-1 (∫_{Q_R} |D_x u|^2 + ∫_{Q_R} u_t^2)``; needs ``rho <= 0.9 R``."""
    _gap_check("CACC2", rho, R, 0.9, "0.9 R")
    s, L = _cylinders(traj, rho, R, center, t_center)
    lhs = norms.cyl_integral(traj, s, "grad2", "interior", sup=True) + norms.cyl_integral(traj, s, "grad2", "boundary")
    rhs = _energy_rhs(traj, L, R - rho)
    return _report("CACC2", lhs, rhs, dict(_resolution(traj), rho=rho, R=R))


def check_caccioppoli_III(traj: Trajectory, rho: float, R: float, center=(0.0, 0.0), t_center: float = 0.0) -> InequalityReport:
    """``sup_I ∫_{B_rho} |D_x u|^2 + ∫_{∂'Q_rho} u_t^2`` against the right side of
    :func:`check_caccioppoli_II`; the stated range is ``rho <= 7R/8``."""
    _gap_check("CACC3", rho, R, 7.0 / 8.0, "7R/8")
    s, L = _cylinders(traj, rho, R, center, t_center)
    lhs = norms.cyl_integral(traj, s, "grad2", "interior", sup=True) + norms.cyl_integral(traj, s, "ut2", "boundary")
    rhs = _energy_rhs(traj, L, R - rho)
    return _report("CACC3", lhs, rhs, dict(_resolution(traj), rho=rho, R=R))


def check_compat(traj: Trajectory, rho: float, center=(0.0, 0.0), t_center: float | None = None) -> InequalityReport:
    """Compatible energy condition as an inequality report (see :func:`~bdlab.evolution.check_compatibility`)."""
    c = check_compatibility(traj, rho, center, t_center)
    return _report("COMPAT_E", c.numerator, c.denominator, dict(_resolution(traj), rho=rho))


# ----------------------------------------------------------------------
# iteration and decay checks


def oscillation_excess(traj: Trajectory, rho: float, center=(0.0, 0.0), t_center: float = 0.0) -> float:
    """``E(rho)``: mean squared deviation of ``u`` from the boundary mean ``u_rho``
    and from the interior mean ``u~_rho``, each over ``∂'Q_rho`` and ``Q_rho``."""
    cyl = cylinder_nodes(traj.grid, traj.times, rho, center, t_center)
    means = (norms.cyl_average(traj, cyl, "u", "boundary"), norms.cyl_average(traj, cyl, "u", "interior"))
    total = 0.0
    for region, measure in (("boundary", cyl.boundary_measure), ("interior", cyl.interior_measure)):
        for lam in means:
            total += norms.cyl_integral(traj, cyl, "dev2", region, lam=lam) / measure
    return total


def check_iteration_decay(
    traj: Trajectory,
    ladder: Sequence[float],
    R: float,
    center=(0.0, 0.0),
    t_center: float = 0.0,
) -> InequalityReport:
    """Fit ``log E(rho)`` against ``log rho`` on the ladder and compare with ``(rho/R)^2 E(R)``.

    The reported ``lhs`` and ``rhs`` are those of the smallest radius; the
    empirical constant is the largest quotient ``E(rho) / ((rho/R)^2 E(R))``
    over the ladder. ``meta["slope"]`` holds the fitted exponent.

    Raises
    ------
    VerificationError
        If the ladder has fewer than three radii or leaves ``(0, R/2]``.
    """
    ladder = sorted((float(r) for r in ladder), reverse=True)
    if len(ladder) < 3:
        raise VerificationError("ITER_DECAY", f"ladder too short ({len(ladder)} < 3 radii)")
    if ladder[0] > R / 2 + 1e-12 or ladder[-1] <= 0:
        raise VerificationError("ITER_DECAY", f"ladder must lie in (0, R/2] with R={R}")
    ER = oscillation_excess(traj, R, center, t_center)
    E = np.array([oscillation_excess(traj, r, center, t_center) for r in ladder])
    meta = dict(_resolution(traj), R=R, ladder=ladder, excess=E.tolist(), excess_R=ER)
    if ER == 0 and np.all(E == 0):
        meta["slope"] = None
        return _report("ITER_DECAY", 0.0, 0.0, meta)
    if np.all(E > 0):
        meta["slope"] = float(np.polyfit(np.log(ladder), np.log(E), 1)[0])
    else:
        meta["slope"] = None
    bounds = (np.asarray(ladder) / R) ** 2 * ER
    k = int(np.argmax(E / np.where(bounds > 0, bounds, np.inf))) if ER > 0 else len(ladder) - 1
    return _report("ITER_DECAY", E[k], bounds[k], dict(meta, rho=ladder[k]))


def _source_terms(traj, L, f, F) -> tuple[float, float]:
    """``R^-1 sum ||F_i||^2_{Q_R} + ||F_n||^2_{∂'Q_R}`` and ``||f||^2`` / ``||f - (f)_R||^2`` pieces."""
    R = L.rho
    fF = 0.0
    if F is not None:
        for Fi in F:
            fF += norms.cyl_integral(traj, L, "u2", "interior", values=Fi) / R
        fF += norms.cyl_integral(traj, L, "u2", "boundary", values=F[-1])
    return fF, 0.0 if f is None else norms.cyl_integral(traj, L, "u2", "boundary", values=f)


def _excess_sum(traj, cyl, rho_scale: float) -> float:
    total = 0.0
    for variant in ("P", "P~"):
        P = norms.fit_polynomial(traj, cyl.rho, variant, cyl.center, cyl.t_center)
        total += norms.h1_seminorm(traj, cyl, "boundary", P) + norms.h1_seminorm(traj, cyl, "interior", P) / rho_scale
    return total


def _nodal_source(traj: Trajectory, g) -> np.ndarray | None:
    if g is None:
        return None
    if callable(g):
        p = traj.grid.points
        return np.array([np.asarray(g(p[:, 0], p[:, 1], t), dtype=float) * np.ones(len(p)) for t in traj.times])
    arr = np.asarray(g, dtype=float)
    if arr.ndim == 0:
        return np.full(traj.values.shape, float(arr))
    if arr.shape != traj.values.shape:
        raise ValueError(f"source data has shape {arr.shape}, expected {traj.values.shape}")
    return arr


def check_nonhom_iteration(
    traj: Trajectory,
    rho: float,
    R: float,
    f=None,
    F: Sequence | None = None,
    center=(0.0, 0.0),
    t_center: float = 0.0,
) -> InequalityReport:
    """H1 decay with sources and its comparison-polynomial form.

    Main report (H1 form)::

        lhs = [u]^2_{H1(∂'Q_rho)} + rho^-1 [u]^2_{H1(Q_rho)}
        rhs = (rho/R)^n ([u]^2_{H1(∂'Q_R)} + R^-1 [u]^2_{H1(Q_R)})
              + R^-1 sum ||F_i||^2_{Q_R} + ||F_n||^2_{∂'Q_R} + ||f||^2_{∂'Q_R}

    ``meta`` carries the excess form (``excess_lhs``, ``excess_rhs``,
    ``excess_ratio``): the same sums for ``u - P(u, .)`` and ``u - P~(u, .)``
    with exponent ``n + 2`` and ``||f - (f)_R||^2`` in place of ``||f||^2``.

    Parameters
    ----------
    traj : Trajectory
    rho, R : float
        Radii with ``rho <= R/2``.
    f : callable, number or array (M, N), optional
        Boundary source (only boundary nodes are used).
    F : sequence of arrays (M, N), optional
        Interior divergence-form source ``(F_1, ..., F_n)``.
    """
    if not (0 < rho <= R / 2 + 1e-12):
        raise VerificationError("NONHOM_ITER", f"need 0 < rho <= R/2, got rho={rho}, R={R}")
    n = 2
    s, L = _cylinders(traj, rho, R, center, t_center)
    fv = _nodal_source(traj, f)
    Fv = None if F is None else [_nodal_source(traj, Fi) for Fi in F]
    lhs = norms.h1_seminorm(traj, s, "boundary") + norms.h1_seminorm(traj, s, "interior") / rho
    big = norms.h1_seminorm(traj, L, "boundary") + norms.h1_seminorm(traj, L, "interior") / R
    src_F, src_f = _source_terms(traj, L, fv, Fv)
    rhs = (rho / R) ** n * big + src_F + src_f
    ex_l = _excess_sum(traj, s, rho)
    ex_big = _excess_sum(traj, L, R)
    osc = 0.0
    if fv is not None:
        mean = norms.cyl_average(traj, L, region="boundary", values=fv)
        osc = norms.cyl_integral(traj, L, "dev2", "boundary", lam=mean, values=fv)
    ex_r = (rho / R) ** (n + 2) * ex_big + src_F + osc
    meta = dict(
        _resolution(traj),
        rho=rho,
        R=R,
        homogeneous_rhs=(rho / R) ** n * big,
        source_F=src_F,
        source_f=src_f,
        excess_lhs=ex_l,
        excess_rhs=ex_r,
        excess_ratio=ex_l / ex_r if ex_r > 0 else None,
        source_osc=osc,
    )
    return _report("NONHOM_ITER", lhs, rhs, meta)


# ----------------------------------------------------------------------
# Morrey and Schauder estimates


def _morrey_h1(traj, theta, ladder, region, center, t_center) -> float:
    return sum(
        norms.morrey_norm(traj, theta, ladder, region, name, center=center, t_center=t_center) ** 2
        for name in ("ux", "uy", "ut")
    )


def check_morrey_estimate(
    traj: Trajectory,
    R: float,
    theta: float = 1.0,
    depth: int = 3,
    f=None,
    center=(0.0, 0.0),
    t_center: float = 0.0,
) -> InequalityReport:
    """Morrey bound of the derivatives on the half cylinder.

    ``lhs = [u]^2_{H^{1,theta}(∂'Q_{R/2})} + [u]^2_{H^{1,theta}(Q_{R/2})}`` where
    ``[u]^2_{H^{1,theta}}`` sums the squared Morrey norms of ``d_1 u``,
    ``d_2 u`` and ``d_t u``; ``rhs = [u]^2_{H1(∂'Q_R)} + R^-1 [u]^2_{H1(Q_R)}
    + ||u||^2_{L^{2,theta}(∂'Q_R)} + ||f||^2_{L^{2,theta}(∂'Q_R)}``. Suprema
    over radii run over ``radius_ladder(R/2, depth)`` and
    ``radius_ladder(R, depth + 1)``.
    """
    if not (0 <= theta < 2):
        raise VerificationError("MORREY_EST", f"theta={theta} outside the Morrey range [0, n)")
    half = norms.radius_ladder(R / 2, depth)
    full = norms.radius_ladder(R, depth + 1)
    lhs = _morrey_h1(traj, theta, half, "boundary", center, t_center) + _morrey_h1(
        traj, theta, half, "interior", center, t_center
    )
    L = cylinder_nodes(traj.grid, traj.times, R, center, t_center)
    rhs = norms.h1_seminorm(traj, L, "boundary") + norms.h1_seminorm(traj, L, "interior") / R
    rhs += norms.morrey_norm(traj, theta, full, "boundary", "u", center=center, t_center=t_center) ** 2
    fv = _nodal_source(traj, f)
    if fv is not None:
        rhs += norms.morrey_norm(traj, theta, full, "boundary", values=fv, center=center, t_center=t_center) ** 2
    return _report("MORREY_EST", lhs, rhs, dict(_resolution(traj), R=R, theta=theta, ladder=half))


def check_schauder_local(
    traj: Trajectory,
    R: float,
    alpha: float = 0.5,
    f=None,
    center=(0.0, 0.0),
    t_center: float = 0.0,
    seed: int = 0,
) -> InequalityReport:
    """``[u]^2_{C^{1+a}(∂'Q_{R/2})} + [u]^2_{C^{1+a}(Q_{R/2})}`` against
    ``||u||^2_{H1(∂'Q_R)} + ||u||^2_{H1(Q_R)} + ||u||^2_{C^a(∂'Q_R)} + ||f||^2_{C^a(∂'Q_R)}``."""
    half = cylinder_nodes(traj.grid, traj.times, R / 2, center, t_center)
    L = cylinder_nodes(traj.grid, traj.times, R, center, t_center)
    cb = norms.c1alpha_seminorm(traj, half, alpha, "boundary", seed)
    ci = norms.c1alpha_seminorm(traj, half, alpha, "interior", seed)
    ca = norms.calpha_norm(traj, L, alpha, "boundary", seed=seed)
    fv = _nodal_source(traj, f)
    cf = 0.0 if fv is None else norms.calpha_norm(traj, L, alpha, "boundary", values=fv, seed=seed)
    h1 = norms.h1_norm(traj, L, "boundary") + norms.h1_norm(traj, L, "interior")
    lhs = cb**2 + ci**2
    rhs = h1 + ca**2 + cf**2
    meta = dict(_resolution(traj), R=R, alpha=alpha, c1a_boundary=cb, c1a_interior=ci, calpha_u=ca, calpha_f=cf, seed=seed)
    return _report("SCHAUDER_LOCAL", lhs, rhs, meta)


# ----------------------------------------------------------------------
# global estimate on the disk


@dataclass(frozen=True, eq=False)
class ChartCover:
    """Overlapping charts of the disk used for the global Hölder quantities.

    Attributes
    ----------
    boundary_groups : list of ndarray
        Boundary node positions (indices into ``grid.boundary``) per arc.
    interior_groups : list of ndarray
        Off-boundary node positions (indices into the interior node list)
        per chart: one collar piece per arc plus the inner disk.
    delta : float
        Localization radius; only pairs closer than ``delta`` are compared.
    charts : list
        Flattened chart data of each arc (for the report).
    """

    boundary_groups: list
    interior_groups: list
    delta: float
    centers: np.ndarray
    charts: list


def arc_cover(grid, n_arcs: int = 8, delta: float = 0.2) -> ChartCover:
    """Half-overlapping boundary arcs with collars of depth ``2 delta`` plus an inner disk.

    Arc ``j`` is centered at angle ``2 pi j / n_arcs`` and spans twice the
    spacing, so consecutive arcs overlap by half. Its collar holds the nodes
    with ``r >= 1 - 2 delta`` in the same sector; the inner chart holds
    ``r <= 1 - delta``. Any two nodes closer than ``delta`` then share a chart
    (checked by :func:`check_schauder_global`).
    """
    if grid.kind != "disk":
        raise ValueError("arc covers are built on disk grids")
    if n_arcs < 4:
        raise ValueError("need at least 4 arcs")
    if not (0 < delta < 0.25):
        raise ValueError("delta must lie in (0, 0.25)")
    spacing = 2 * np.pi / n_arcs
    centers = spacing * np.arange(n_arcs)
    th = grid.theta
    r = grid.radius
    bnd = grid.boundary
    inner = np.setdiff1d(np.arange(grid.n_nodes), bnd)
    b_groups, i_groups, charts = [], [], []
    half = min(spacing, np.pi / 2)
    L = np.sin(half)
    local = build_halfspace_grid(L, L / 4)
    for c in centers:
        dth = np.abs(np.angle(np.exp(1j * (th - c))))
        in_arc = dth <= spacing + 1e-12
        b_groups.append(np.flatnonzero(in_arc[bnd]))
        i_groups.append(np.flatnonzero(in_arc[inner] & (r[inner] >= 1 - 2 * delta - 1e-12)))
        charts.append(build_chart(lambda y: 1.0 - np.sqrt(np.maximum(1.0 - y**2, 0.0)), local, lambda y: y / np.sqrt(np.maximum(1.0 - y**2, 1e-300))))
    i_groups.append(np.flatnonzero(r[inner] <= 1 - delta + 1e-12))
    return ChartCover(b_groups, i_groups, float(delta), centers, charts)


def check_schauder_global(
    traj: Trajectory,
    alpha: float = 0.5,
    n_arcs: int = 8,
    delta: float = 0.2,
    f=None,
    seed: int = 0,
) -> InequalityReport:
    """Global estimate on the disk over ``(t_0, t_M)``.

    The left side takes, for each of ``d_1 v``, ``d_2 v`` and ``d_t v``, the
    largest chart-local Hölder quotient (pairs closer than ``delta`` inside a
    common chart) on the circle and in the disk. The right side is
    ``||v||^2_{H1(∂Ω x I)} + ||v||^2_{H1(Ω x I)} + ||v||^2_{C^a(∂Ω x I)}
    + ||f||^2_{C^a(∂Ω x I)}`` by direct quadrature over all nodes and stamps.

    Raises
    ------
    VerificationError
        If some admissible pair lies in no chart ("chart cover incomplete").
    """
    grid = traj.grid
    cover = arc_cover(grid, n_arcs, delta)
    bnd = grid.boundary
    inner = np.setdiff1d(np.arange(grid.n_nodes), bnd)
    xy = grid.points
    lhs_parts = {}
    for region, nodes, groups in (("boundary", bnd, cover.boundary_groups), ("interior", inner, cover.interior_groups)):
        best = 0.0
        for name in ("ux", "uy", "ut"):
            vals = norms.field_values(traj, name)[:, nodes]
            _, per_group, uncovered = norms.holder_seminorm_local(vals, xy[nodes], traj.times, alpha, delta, groups)
            if uncovered:
                raise VerificationError("SCHAUDER_GLOBAL", f"chart cover incomplete ({uncovered} {region} pairs uncovered)")
            best = max(best, float(per_group.max()))
        lhs_parts[region] = best
    # right side over the full time span
    wt = time_weights(traj.times, traj.times[0], traj.times[-1])
    face = grid.face

    def quad(dens: np.ndarray, w: np.ndarray) -> float:
        return float(wt @ dens @ w)

    gx, gy = traj.gradient
    ut = traj.dt
    u = traj.values
    dens = u * u + gx * gx + gy * gy + ut * ut
    h1_b = quad(dens[:, bnd], face)
    h1_i = quad(dens, grid.volumes)
    pts = np.column_stack([np.repeat(traj.times, bnd.size), np.tile(xy[bnd], (traj.times.size, 1))])[:, [1, 2, 0]]
    vb = u[:, bnd].ravel()
    ca = float(np.max(np.abs(vb)) + norms.holder_seminorm(vb, pts, alpha, seed=seed))
    cf = 0.0
    fv = _nodal_source(traj, f)
    if fv is not None:
        fb = fv[:, bnd].ravel()
        cf = float(np.max(np.abs(fb)) + norms.holder_seminorm(fb, pts, alpha, seed=seed))
    lhs = lhs_parts["boundary"] ** 2 + lhs_parts["interior"] ** 2
    rhs = h1_b + h1_i + ca**2 + cf**2
    meta = dict(
        _resolution(traj),
        alpha=alpha,
        n_arcs=n_arcs,
        delta=delta,
        c1a_boundary=lhs_parts["boundary"],
        c1a_interior=lhs_parts["interior"],
        calpha_v=ca,
        calpha_f=cf,
        chart_eigen_bounds=list(cover.charts[0].eigen_bounds()),
        seed=seed,
    )
    return _report("SCHAUDER_GLOBAL", lhs, rhs, meta)


# ----------------------------------------------------------------------
# suite


def _halfspace_checks(traj: Trajectory, vr: dict, nv: dict, seed: int) -> list[InequalityReport]:
    rho, R = vr["rho"], vr["R"]
    ladder = norms.radius_ladder(R / 2, nv["ladder_depth"])
    steps = [
        ("CACC1", lambda: check_caccioppoli_I(traj, rho, R)),
        ("CACC2", lambda: check_caccioppoli_II(traj, rho, R)),
        ("CACC3", lambda: check_caccioppoli_III(traj, rho, R)),
        ("COMPAT_E", lambda: check_compat(traj, R, t_center=0.0)),
        ("ITER_DECAY", lambda: check_iteration_decay(traj, ladder, R)),
        ("NONHOM_ITER", lambda: check_nonhom_iteration(traj, vr["nonhom_rho"], R, f=0.0)),
        ("MORREY_EST", lambda: check_morrey_estimate(traj, R, nv["theta"], nv["ladder_depth"], f=0.0)),
        ("SCHAUDER_LOCAL", lambda: check_schauder_local(traj, R, nv["alpha"], f=0.0, seed=seed)),
    ]
    return [_guarded(cid, fn) for cid, fn in steps]


def _guarded(check_id: str, fn) -> InequalityReport:
    try:
        return fn()
    except VerificationError:
        raise
    except Exception as exc:  # any failure aborts the suite under the failing id
        raise VerificationError(check_id, f"{type(exc).__name__}: {exc}") from exc


def run_verification_suite(cfg, trajectories: dict | None = None) -> list[InequalityReport]:
    """Run every configured problem over the refinement ladder and collect the reports.

    Parameters
    ----------
    cfg : ExperimentConfig
        Uses the ``verification``, ``norms``, ``solver`` and ``experiment``
        sections; ``experiment.depth`` is the number of refinement levels
        (each level halves ``h`` and ``tau``).
    trajectories : dict, optional
        Receives the finest trajectory of each problem, keyed by name.

    Returns
    -------
    list of InequalityReport
        One report per id, sorted by id, each carrying its refinement history.

    Raises
    ------
    VerificationError
        Naming the check whose precondition or evaluation failed.
    """
    from .problems import disk_mode, halfspace_mode, solve

    vr = cfg["verification"]
    nv = cfg["norms"]
    depth = cfg["experiment"]["depth"]
    seed = cfg["experiment"]["seed"]
    tol = cfg["solver"]["tol"]
    problems = vr["problems"]
    if not problems:
        return []
    if "halfspace-mode" in problems:
        # fail before any solve when a radius is outside its stated range
        _gap_check("CACC1", vr["rho"], vr["R"], 0.9, "0.9 R")
        _gap_check("CACC2", vr["rho"], vr["R"], 0.9, "0.9 R")
        _gap_check("CACC3", vr["rho"], vr["R"], 7.0 / 8.0, "7R/8")
        if not (0 < vr["nonhom_rho"] <= vr["R"] / 2):
            raise VerificationError("NONHOM_ITER", f"need 0 < nonhom_rho <= R/2, got {vr['nonhom_rho']}")
    per_id: dict[str, list] = {}
    for name in problems:
        for level in range(depth):
            s = 2.0**-level
            if name == "halfspace-mode":
                R = vr["R"]
                ep = halfspace_mode(vr["h"] * s, vr["tau"] * s, R=R, t0=-R, T=2 * R, tol=tol)
                traj = solve(ep)
                reports = _halfspace_checks(traj, vr, nv, seed)
            else:
                n_r = (vr["n_r"] - 1) * 2**level + 1
                ep = disk_mode(n_r, vr["n_theta"] * 2**level, vr["disk_tau"] * s, k=1, T=vr["disk_T"], tol=tol)
                traj = solve(ep)
                reports = [
                    _guarded(
                        "SCHAUDER_GLOBAL",
                        lambda: check_schauder_global(traj, nv["alpha"], vr["n_arcs"], vr["delta"], seed=seed),
                    )
                ]
            for r in reports:
                r.meta["problem"] = name
                r.meta["level"] = level
                per_id.setdefault(r.id, []).append(r)
            if trajectories is not None and level == depth - 1:
                trajectories[name] = traj
    return [with_history(per_id[k]) for k in sorted(per_id)]
