"""Function-space quantities on trajectories.

All integrals are taken over a :class:`~bdlab.grid.Cylinder` with the
cell-measure weights it carries: ``region="boundary"`` integrates over the
flat part ``∂'Q_rho`` (face lengths times time weights), ``region="interior"``
over ``Q_rho`` (cell areas times time weights). Derivative fields come from
the trajectory caches.

Hölder quotients use the space-time distance ``max(|x - y|, |t - s|)``, the
metric under which the cylinders ``B_rho x (-rho, rho)`` are balls.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .grid import Cylinder, cylinder_nodes

__all__ = [
    "Polynomial",
    "field_values",
    "cyl_integral",
    "cyl_average",
    "h1_seminorm",
    "h1_norm",
    "radius_ladder",
    "morrey_norm",
    "campanato_seminorm",
    "holder_seminorm",
    "holder_seminorm_local",
    "region_samples",
    "fit_polynomial",
    "c1alpha_seminorm",
    "calpha_norm",
]

EXHAUSTIVE_LIMIT = 20_000
RANDOM_PAIRS = 10_000_000
STRIDED_POINTS = EXHAUSTIVE_LIMIT

_FIELDS = ("u", "ux", "uy", "ut")


def field_values(traj, name: str) -> np.ndarray:
    """Nodal array ``(M, N)`` of ``u``, ``ux``, ``uy`` or ``ut``."""
    if name == "u":
        return traj.values
    if name == "ut":
        return traj.dt
    if name == "ux":
        return traj.gradient[0]
    if name == "uy":
        return traj.gradient[1]
    raise ValueError(f"unknown field {name!r}; expected one of {_FIELDS}")


def _spatial_weights(traj, cyl: Cylinder, region: str) -> np.ndarray:
    if region == "interior":
        return cyl.w_int
    if region == "boundary":
        w = np.zeros(traj.grid.n_nodes)
        w[traj.grid.boundary] = cyl.w_bnd
        return w
    raise ValueError(f"region must be 'boundary' or 'interior', got {region!r}")


def _support(traj, cyl: Cylinder, region: str):
    ws = _spatial_weights(traj, cyl, region)
    nodes = np.flatnonzero(ws > 0)
    times = np.flatnonzero(cyl.w_time > 0)
    return nodes, times, ws[nodes], cyl.w_time[times]


@dataclass(frozen=True)
class Polynomial:
    """Linear space-time polynomial ``c1 (x1 - x01) + c2 (x2 - x02) + ct (t - t0)``.

    ``variant`` is ``"P"`` (boundary averages) or ``"P~"`` (interior averages).
    The polynomial vanishes at the cylinder center.
    """

    c: tuple
    ct: float
    variant: str = "P"
    center: tuple = (0.0, 0.0)
    t_center: float = 0.0

    @property
    def coefficients(self) -> tuple:
        return (*self.c, self.ct)

    def __call__(self, x1, x2, t):
        return (
            self.c[0] * (np.asarray(x1) - self.center[0])
            + self.c[1] * (np.asarray(x2) - self.center[1])
            + self.ct * (np.asarray(t) - self.t_center)
        )


def _density(traj, integrand: str, nodes, times, lam=0.0, poly: Polynomial | None = None, values=None):
    ix = np.ix_(times, nodes)
    if integrand in ("u2", "dev2"):
        u = traj.values[ix] if values is None else np.asarray(values)[ix]
        if integrand == "u2":
            return u * u
        return (u - lam) ** 2
    gx = field_values(traj, "ux")[ix]
    gy = field_values(traj, "uy")[ix]
    if integrand == "grad2":
        if poly is not None:
            gx, gy = gx - poly.c[0], gy - poly.c[1]
        return gx * gx + gy * gy
    ut = field_values(traj, "ut")[ix]
    if integrand == "ut2":
        if poly is not None:
            ut = ut - poly.ct
        return ut * ut
    if integrand in ("h1", "h1_excess"):
        if integrand == "h1_excess":
            if poly is None:
                raise ValueError("h1_excess needs a polynomial")
            gx, gy, ut = gx - poly.c[0], gy - poly.c[1], ut - poly.ct
        return gx * gx + gy * gy + ut * ut
    raise ValueError(f"unknown integrand {integrand!r}")


def cyl_integral(
    traj,
    cyl: Cylinder,
    integrand: str,
    region: str = "interior",
    lam: float = 0.0,
    poly: Polynomial | None = None,
    sup: bool = False,
    values: np.ndarray | None = None,
) -> float:
    """Quadrature of a density over ``Q_rho`` or ``∂'Q_rho``.

    Parameters
    ----------
    traj : Trajectory
    cyl : Cylinder
    integrand : str
        ``"u2"`` (``u^2``), ``"dev2"`` (``(u - lam)^2``), ``"grad2"``
        (``|D_x u|^2``), ``"ut2"`` (``u_t^2``), ``"h1"`` (``|D_x u|^2 + u_t^2``)
        or ``"h1_excess"`` (the same for ``u - poly``). ``"grad2"`` and
        ``"ut2"`` also subtract ``poly`` when it is given.
    region : {"interior", "boundary"}
    lam : float
    poly : Polynomial, optional
    sup : bool
        If true return ``max_t`` of the spatial integral over the time slices
        strictly inside ``I_rho`` instead of the space-time integral.
    values : ndarray, optional
        Replaces ``u`` for ``"u2"`` and ``"dev2"`` (e.g. source data).
    """
    nodes, times, ws, wt = _support(traj, cyl, region)
    if nodes.size == 0 or times.size == 0:
        raise ValueError("empty cylinder")
    if sup:
        times = cyl.time_index
        dens = _density(traj, integrand, nodes, times, lam, poly, values)
        return float(np.max(dens @ ws))
    dens = _density(traj, integrand, nodes, times, lam, poly, values)
    return float(wt @ dens @ ws)


def cyl_average(traj, cyl: Cylinder, field: str = "u", region: str = "interior", values=None) -> float:
    """Weighted mean of a field over ``Q_rho`` or ``∂'Q_rho``."""
    nodes, times, ws, wt = _support(traj, cyl, region)
    arr = field_values(traj, field) if values is None else np.asarray(values)
    return float(wt @ arr[np.ix_(times, nodes)] @ ws / (wt.sum() * ws.sum()))


def h1_seminorm(traj, cyl: Cylinder, region: str = "boundary", poly: Polynomial | None = None) -> float:
    """Squared seminorm ``[u - poly]^2_{H^1} = ∫ |D_x (u - poly)|^2 + |d_t (u - poly)|^2``."""
    if poly is None:
        return cyl_integral(traj, cyl, "h1", region)
    return cyl_integral(traj, cyl, "h1_excess", region, poly=poly)


def h1_norm(traj, cyl: Cylinder, region: str = "boundary") -> float:
    """Squared norm ``||u||^2_{H^1} = ∫ u^2 + |D_x u|^2 + u_t^2``."""
    return cyl_integral(traj, cyl, "u2", region) + cyl_integral(traj, cyl, "h1", region)


def radius_ladder(R: float, depth: int) -> list[float]:
    """Radii ``R, R/2, ..., R 2^{1-depth}``."""
    if depth < 1:
        raise ValueError("ladder depth must be at least 1")
    return [R * 2.0**-k for k in range(depth)]


def _scale(rho: float, theta: float, region: str) -> float:
    return rho ** -(theta + (1.0 if region == "interior" else 0.0))


def morrey_norm(
    traj,
    theta: float,
    ladder,
    region: str = "boundary",
    field: str = "u",
    values: np.ndarray | None = None,
    center=(0.0, 0.0),
    t_center: float = 0.0,
) -> float:
    """``(max_k rho_k^-theta' ∫ |g|^2)^{1/2}`` over the radius ladder.

    ``theta' = theta`` on the boundary and ``theta + 1`` in the interior.
    ``g`` is ``field`` of ``traj`` or the array ``values``.
    """
    ladder = list(ladder)
    if not ladder:
        raise ValueError("empty ladder")
    arr = field_values(traj, field) if values is None else np.asarray(values)
    best = 0.0
    for rho in ladder:
        cyl = cylinder_nodes(traj.grid, traj.times, rho, center, t_center)
        val = _scale(rho, theta, region) * cyl_integral(traj, cyl, "u2", region, values=arr)
        best = max(best, val)
    return float(np.sqrt(best))


def campanato_seminorm(
    traj,
    theta: float,
    ladder,
    region: str = "boundary",
    field: str = "u",
    values: np.ndarray | None = None,
    center=(0.0, 0.0),
    t_center: float = 0.0,
) -> float:
    """``(max_k rho_k^-theta' ∫ |g - mean_k g|^2)^{1/2}`` with the cylinder mean of the region."""
    ladder = list(ladder)
    if not ladder:
        raise ValueError("empty ladder")
    arr = field_values(traj, field) if values is None else np.asarray(values)
    best = 0.0
    for rho in ladder:
        cyl = cylinder_nodes(traj.grid, traj.times, rho, center, t_center)
        mean = cyl_average(traj, cyl, region=region, values=arr)
        val = _scale(rho, theta, region) * cyl_integral(traj, cyl, "dev2", region, lam=mean, values=arr)
        best = max(best, val)
    return float(np.sqrt(best))


# ----------------------------------------------------------------------
# Hölder quotients


def _quotients(fi, fj, pi, pj, alpha):
    dx = np.linalg.norm(pi[:, :-1] - pj[:, :-1], axis=1) if pi.shape[1] > 1 else np.zeros(len(pi))
    dt = np.abs(pi[:, -1] - pj[:, -1])
    d = np.maximum(dx, dt)
    return d, np.abs(fi - fj)


def _pow_alpha(d2: np.ndarray, alpha: float) -> np.ndarray:
    """``d^(2 alpha)`` from the squared distance."""
    if alpha == 1.0:
        return d2
    if alpha == 0.5:
        return np.sqrt(d2)
    return np.power(d2, alpha)


def _exhaustive(f: np.ndarray, p: np.ndarray, alpha: float, max_dist: float | None) -> float:
    """Every pair; works with squared quotients in row blocks of about 2e6 pairs."""
    P = f.size
    xs = p[:, :-1]
    t = p[:, -1]
    chunk = max(1, 2_000_000 // P)
    lim2 = np.inf if max_dist is None else max_dist**2 * (1 + 1e-12)
    best2 = 0.0
    for s in range(0, P - 1, chunk):
        e = min(P - 1, s + chunk)
        # rows s..e-1 against columns s..P-1; the j < i entries repeat pairs harmlessly
        d2 = t[s:e, None] - t[None, s:]
        d2 *= d2
        ds2 = np.zeros_like(d2)
        for c in range(xs.shape[1]):
            diff = xs[s:e, c, None] - xs[None, s:, c]
            diff *= diff
            ds2 += diff
        np.maximum(d2, ds2, out=d2)
        d2[(d2 == 0) | (d2 > lim2)] = np.inf
        df = f[s:e, None] - f[None, s:]
        df *= df
        best2 = max(best2, float(np.max(df / _pow_alpha(d2, alpha))))
    return float(np.sqrt(best2))


def holder_seminorm(
    values: np.ndarray,
    points: np.ndarray,
    alpha: float,
    max_dist: float | None = None,
    seed: int = 0,
    n_pairs: int = RANDOM_PAIRS,
) -> float:
    """``max |f(p) - f(q)| / d(p, q)^alpha`` over pairs of sample points.

    Parameters
    ----------
    values : ndarray, shape (P,)
    points : ndarray, shape (P, k)
        Coordinates; the last column is time, the others space.
    alpha : float
        Exponent in ``(0, 1]``.
    max_dist : float, optional
        Only pairs with ``d <= max_dist`` count.
    seed : int
        Seed of the pair subsample.
    n_pairs : int
        Number of random pairs used when ``P`` exceeds 20,000.

    Notes
    -----
    Up to 20,000 points every pair is visited. Above that, every pair of an
    evenly strided subset of at most 20,000 points is visited and ``n_pairs``
    further pairs are drawn uniformly (with a seeded generator). The maximum
    over both samples is a lower bound of the exhaustive value.
    """
    f = np.asarray(values, dtype=float).ravel()
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    P = f.size
    if P < 2:
        return 0.0
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    if P <= EXHAUSTIVE_LIMIT:
        return _exhaustive(f, p, alpha, max_dist)
    # every pair of an evenly strided subset ...
    stride = -(-P // STRIDED_POINTS)
    sub = np.arange(0, P, stride)
    best = _exhaustive(f[sub], p[sub], alpha, max_dist)
    # ... plus uniformly drawn pairs over the full set
    rng = np.random.default_rng(seed)
    batch = 1_000_000
    done = 0
    while done < n_pairs:
        n = min(batch, n_pairs - done)
        i = rng.integers(0, P, n)
        j = rng.integers(0, P, n)
        d, num = _quotients(f[i], f[j], p[i], p[j], alpha)
        mask = d > 0
        if max_dist is not None:
            mask &= d <= max_dist
        if np.any(mask):
            best = max(best, float(np.max(num[mask] / d[mask] ** alpha)))
        done += n
    return best


def holder_seminorm_local(
    values: np.ndarray,
    xy: np.ndarray,
    times: np.ndarray,
    alpha: float,
    max_dist: float,
    groups: list[np.ndarray] | None = None,
) -> tuple[float, np.ndarray, int]:
    """Exhaustive Hölder quotient over pairs closer than ``max_dist`` on a node x stamp product.

    Parameters
    ----------
    values : ndarray, shape (M, S)
        Field at ``S`` spatial nodes and ``M`` uniform stamps.
    xy : ndarray, shape (S, 2)
    times : ndarray, shape (M,)
    alpha, max_dist : float
    groups : list of ndarray of int, optional
        Spatial node subsets (charts). When given, a pair counts for a group
        when both of its nodes belong to it.

    Returns
    -------
    best : float
        Maximum over all admissible pairs.
    per_group : ndarray
        Maximum restricted to each group (empty when ``groups`` is None).
    uncovered : int
        Number of admissible spatial pairs lying in no group.
    """
    values = np.asarray(values, dtype=float)
    M, S = values.shape
    tree = cKDTree(xy)
    pairs = tree.query_pairs(max_dist, output_type="ndarray")
    self_pairs = np.column_stack([np.arange(S), np.arange(S)])
    pairs = np.vstack([self_pairs, pairs]) if pairs.size else self_pairs
    dx = np.linalg.norm(xy[pairs[:, 0]] - xy[pairs[:, 1]], axis=1)
    tau = float(times[1] - times[0]) if M > 1 else np.inf
    L = int(np.floor(max_dist / tau + 1e-9)) if M > 1 else 0
    qmax = np.zeros(pairs.shape[0])
    chunk = max(1, 2_000_000 // M)
    for s in range(0, pairs.shape[0], chunk):
        sl = slice(s, s + chunk)
        A = values[:, pairs[sl, 0]]
        B = values[:, pairs[sl, 1]]
        for k in range(-L, L + 1):
            if abs(k) >= M:
                continue
            d = np.maximum(dx[sl], abs(k) * tau)
            ok = (d > 0) & (d <= max_dist + 1e-12)
            if not np.any(ok):
                continue
            diff = np.abs(A[: M - k] - B[k:]) if k >= 0 else np.abs(A[-k:] - B[: M + k])
            q = diff.max(axis=0) / np.where(ok, d, 1.0) ** alpha
            qmax[sl] = np.maximum(qmax[sl], np.where(ok, q, 0.0))
    best = float(qmax.max()) if qmax.size else 0.0
    if groups is None:
        return best, np.zeros(0), 0
    member = np.zeros((len(groups), S), dtype=bool)
    for g, idx in enumerate(groups):
        member[g, idx] = True
    inside = member[:, pairs[:, 0]] & member[:, pairs[:, 1]]
    per_group = np.array([float(qmax[row].max()) if np.any(row) else 0.0 for row in inside])
    uncovered = int(np.sum(~inside.any(axis=0)))
    return best, per_group, uncovered


def region_samples(traj, cyl: Cylinder, region: str) -> tuple[np.ndarray, np.ndarray]:
    """Node and stamp indices of the open cylinder (``Q_rho`` or ``∂'Q_rho``)."""
    nodes = cyl.interior_nodes if region == "interior" else cyl.boundary_nodes
    if region not in ("interior", "boundary"):
        raise ValueError(f"region must be 'boundary' or 'interior', got {region!r}")
    return nodes, cyl.time_index


def _points(traj, nodes, times):
    xy = traj.grid.points[nodes]
    t = traj.times[times]
    P = np.empty((t.size, nodes.size, 3))
    P[:, :, :2] = xy[None]
    P[:, :, 2] = t[:, None]
    return P.reshape(-1, 3)


def calpha_norm(
    traj,
    cyl: Cylinder,
    alpha: float,
    region: str = "boundary",
    field: str = "u",
    values: np.ndarray | None = None,
    seed: int = 0,
) -> float:
    """``||g||_{C^alpha} = sup |g| + [g]_alpha`` over the open cylinder."""
    nodes, times = region_samples(traj, cyl, region)
    arr = field_values(traj, field) if values is None else np.asarray(values)
    v = arr[np.ix_(times, nodes)].ravel()
    return float(np.max(np.abs(v)) + holder_seminorm(v, _points(traj, nodes, times), alpha, seed=seed))


def fit_polynomial(
    traj,
    R: float,
    variant: str = "P",
    center=(0.0, 0.0),
    t_center: float = 0.0,
) -> Polynomial:
    """Comparison polynomial with coefficients equal to derivative averages over ``∂'Q_R`` (``"P"``) or ``Q_R`` (``"P~"``)."""
    if variant not in ("P", "P~"):
        raise ValueError("variant must be 'P' or 'P~'")
    cyl = cylinder_nodes(traj.grid, traj.times, R, center, t_center)
    region = "boundary" if variant == "P" else "interior"
    c1 = cyl_average(traj, cyl, "ux", region)
    c2 = cyl_average(traj, cyl, "uy", region)
    ct = cyl_average(traj, cyl, "ut", region)
    return Polynomial((c1, c2), ct, variant, tuple(center), float(t_center))


def c1alpha_seminorm(traj, cyl: Cylinder, alpha: float, region: str = "boundary", seed: int = 0) -> float:
    """``max`` of the Hölder seminorms of ``d_1 u``, ``d_2 u`` and ``d_t u`` over the open cylinder."""
    nodes, times = region_samples(traj, cyl, region)
    pts = _points(traj, nodes, times)
    best = 0.0
    for name in ("ux", "uy", "ut"):
        v = field_values(traj, name)[np.ix_(times, nodes)].ravel()
        best = max(best, holder_seminorm(v, pts, alpha, seed=seed))
    return best
