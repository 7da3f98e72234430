"""Experiment orchestration: configured runs, convergence studies and their reports.

A run writes into one output directory:

``report.json``
    Deterministic report (sorted keys, ``repr`` floats). Identical
    configuration text gives a byte-identical file.
``timing.json``
    Wall-clock seconds per stage; kept apart so the report stays reproducible.
``trajectory*.csv``
    Trajectory dumps (see :meth:`bdlab.evolution.Trajectory.to_csv`).
``convergence.csv``
    Error against mesh size, for convergence studies.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, emit
from .elliptic import CoefficientBoundError, SolverError
from .evolution import (
    CoefficientField,
    LinearProblem,
    Trajectory,
    check_compatibility,
    fit_decay_rate,
    mode_coefficients,
    run_linear,
)
from .expr import Expression
from .grid import build_chart, build_disk_grid, build_halfspace_grid
from .nonlinear import NonlinearConfig, fixed_point_solve, positivity_bounds, sigma_continuation
from .problems import manufactured_flow
from .verifier import VerificationError, run_verification_suite

__all__ = ["RunReport", "run_experiment", "convergence_study", "write_outputs", "REPORT_NAME", "TIMING_NAME"]

REPORT_NAME = "report.json"
TIMING_NAME = "timing.json"
CONVERGENCE_NAME = "convergence.csv"


@dataclass
class RunReport:
    """Everything a run produced.

    Attributes
    ----------
    command : str
        ``solve``, ``verify`` or ``converge``.
    config : ExperimentConfig
    checks : list of InequalityReport
        Sorted by id.
    tables : dict
        Kind-specific tables keyed by name.
    errors : list of dict
        ``{"check_id": ..., "type": ..., "message": ...}`` per failure.
    timing : dict
        Seconds per stage; written to ``timing.json``, not to the report.
    trajectories : dict
        Name to :class:`Trajectory`; dumped as CSV.
    """

    command: str
    config: ExperimentConfig
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "tool": {"name": "bdlab", "version": __version__},
            "command": self.command,
            "status": "ok" if self.ok else "error",
            "config": self.config.as_dict(),
            "config_text": emit(self.config),
            "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.id)],
            "tables": self.tables,
            "errors": self.errors,
        }

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True, indent=2) + "\n"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _error_entry(exc: Exception, default_id: str) -> dict:
    return {
        "check_id": getattr(exc, "check_id", default_id),
        "type": type(exc).__name__,
        "message": str(exc),
    }


# ----------------------------------------------------------------------
# helpers


def _constant(text: str) -> float | None:
    e = Expression(text)
    return float(e()) if e.is_constant else None


def _coeffs(cfg: ExperimentConfig, **override) -> CoefficientField:
    c = cfg["coefficients"]
    kw = dict(a=c["a"], b=c["b"], f=c["f"], Lambda=c["Lambda"])
    kw.update(override)
    return CoefficientField(**kw)


def _exact(cfg: ExperimentConfig):
    text = cfg["coefficients"]["exact"]
    return Expression(text) if text else None


def _sup_error(traj: Trajectory, exact, nodes: np.ndarray) -> float:
    p = traj.grid.points[nodes]
    ex = np.array([np.broadcast_to(exact(p[:, 0], p[:, 1], t), (nodes.size,)) for t in traj.times])
    return float(np.max(np.abs(traj.values[:, nodes] - ex)))


def _inner_half_chart(grid, R: float) -> np.ndarray:
    x1, x2 = grid.points[:, 0], grid.points[:, 1]
    return np.flatnonzero((np.abs(x1) <= R / 2 + 1e-12) & (x2 <= R / 2 + 1e-12))


def _disk_levels(n_r: int, n_theta: int, level: int) -> tuple[int, int]:
    return (n_r - 1) * 2**level + 1, n_theta * 2**level


# ----------------------------------------------------------------------
# per-kind pipelines


def _linear_disk(cfg: ExperimentConfig, n_r: int, n_theta: int, tau: float) -> Trajectory:
    tm = cfg["time"]
    grid = build_disk_grid(n_r, n_theta)
    prob = LinearProblem(grid, _coeffs(cfg), cfg["coefficients"]["v0"], t0=tm["t0"], tau=tau, tol=cfg["solver"]["tol"])
    return run_linear(prob, tm["T"])


def _linear_halfspace(cfg: ExperimentConfig, h: float, tau: float) -> Trajectory:
    g, tm, c = cfg["grid"], cfg["time"], cfg["coefficients"]
    grid = build_halfspace_grid(g["R"], h)
    phi = Expression(c["phi"])
    chart = None if (phi.is_constant and float(phi()) == 0.0) else build_chart(phi, grid)
    prob = LinearProblem(
        grid, _coeffs(cfg), c["v0"], chart=chart, wall=c["wall"], t0=tm["t0"], tau=tau, tol=cfg["solver"]["tol"]
    )
    return run_linear(prob, tm["T"])


def _mode_decay_table(cfg: ExperimentConfig, traj: Trajectory) -> list[dict]:
    c = cfg["coefficients"]
    a, b, f = _constant(c["a"]), _constant(c["b"]), _constant(c["f"])
    rows = []
    for k in c["modes"]:
        coef = mode_coefficients(traj, k)
        row = {"k": k, "initial": float(coef[0]), "final": float(coef[-1]), "rate": None, "expected": None, "rel_error": None}
        if np.min(np.abs(coef)) > 1e-12:
            row["rate"] = fit_decay_rate(traj.times, coef)
        if a == 1.0 and b is not None and f == 0.0:
            row["expected"] = k + b
            if row["rate"] is not None and k + b != 0:
                row["rel_error"] = abs(row["rate"] - (k + b)) / abs(k + b)
        rows.append(row)
    return rows


def _nonlinear_setup(cfg: ExperimentConfig):
    nl, c = cfg["nonlinear"], cfg["coefficients"]
    ncfg = NonlinearConfig(
        p=nl["p"],
        band=nl["band"],
        tol=nl["fp_tol"],
        max_iter=nl["max_iter"],
        sigma_schedule=nl["sigma_schedule"],
        T=cfg["time"]["T"],
        tau=cfg["time"]["tau"],
        cg_tol=cfg["solver"]["tol"],
    )
    if nl["manufactured"]:
        b = _constant(c["b"])
        if b is None:
            raise ConfigError("coefficients.b", "the manufactured flow needs a constant b")
        mf = manufactured_flow(nl["p"], b, c["Lambda"])
        return ncfg, mf.u0, mf.coeffs, mf
    return ncfg, c["v0"], _coeffs(cfg), None


def _nonlinear_disk(cfg: ExperimentConfig, n_r: int, n_theta: int, tau: float):
    if cfg["time"]["t0"] != 0.0:
        raise ConfigError("time.t0", "the nonlinear flow starts at t0 = 0")
    ncfg, u0, coeffs, mf = _nonlinear_setup(cfg)
    ncfg = replace(ncfg, tau=tau)
    grid = build_disk_grid(n_r, n_theta)
    if cfg["nonlinear"]["method"] == "continuation":
        res = sigma_continuation(grid, u0, ncfg, coeffs)
    else:
        res = fixed_point_solve(grid, u0, ncfg, coeffs)
    return res, mf


def _solve_tables(cfg: ExperimentConfig, report: RunReport) -> None:
    kind = cfg.kind
    g, tm = cfg["grid"], cfg["time"]
    if kind == "linear-disk":
        traj = _linear_disk(cfg, g["n_r"], g["n_theta"], tm["tau"])
        report.trajectories["trajectory"] = traj
        report.tables["mode_decay"] = _mode_decay_table(cfg, traj)
        exact = _exact(cfg)
        if exact is not None:
            report.tables["error"] = {"region": "boundary", "sup_error": _sup_error(traj, exact, traj.grid.boundary)}
    elif kind == "linear-halfspace":
        traj = _linear_halfspace(cfg, g["h"], tm["tau"])
        report.trajectories["trajectory"] = traj
        exact = _exact(cfg)
        if exact is not None:
            nodes = _inner_half_chart(traj.grid, g["R"])
            report.tables["error"] = {"region": "inner half-chart", "sup_error": _sup_error(traj, exact, nodes)}
        # largest cylinder that fits both the chart and the time axis
        rho = min(g["R"] / 2, (traj.times[-1] - traj.times[0]) / 2)
        cr = check_compatibility(traj, rho)
        report.tables["compatibility"] = {
            "rho": cr.rho,
            "numerator": cr.numerator,
            "denominator": cr.denominator,
            "ratio": cr.ratio,
            "flag": cr.flag,
        }
    elif kind == "nonlinear-disk":
        res, mf = _nonlinear_disk(cfg, g["n_r"], g["n_theta"], tm["tau"])
        report.trajectories["trajectory"] = res.u
        pos = positivity_bounds(res.u, cfg["nonlinear"]["band"])
        report.tables["fixed_point"] = {
            "iterations": res.iterations,
            "increments": list(res.increments),
            "contraction_ratios": [float(x) for x in res.contraction_ratios],
            "sigma_history": [list(h) for h in res.history],
        }
        report.tables["positivity"] = {"min": pos.min, "max": pos.max, "band": list(pos.band), "violated": pos.violated}
        if mf is not None:
            report.tables["error"] = {"region": "boundary", "sup_error": mf.error(res.u)}


# ----------------------------------------------------------------------
# public entry points


def run_experiment(cfg: ExperimentConfig, out_dir=None, command: str = "solve") -> RunReport:
    """Execute the configured pipeline and (optionally) write its outputs.

    Parameters
    ----------
    cfg : ExperimentConfig
    out_dir : path, optional
        Receives ``report.json``, ``timing.json`` and CSV dumps.
    command : str
        Recorded in the report.

    Returns
    -------
    RunReport
        ``report.ok`` is false when a solve or check failed; the failure is
        recorded in ``report.errors`` rather than raised.
    """
    report = RunReport(command, cfg)
    start = time.perf_counter()
    try:
        if cfg.kind == "verification-suite":
            report.checks = run_verification_suite(cfg, report.trajectories)
        else:
            _solve_tables(cfg, report)
    except (VerificationError, SolverError, CoefficientBoundError, ConfigError, ValueError) as exc:
        report.errors.append(_error_entry(exc, cfg.kind))
    report.timing["run"] = time.perf_counter() - start
    if out_dir is not None:
        write_outputs(report, out_dir)
    return report


def _fourier_exact(cfg: ExperimentConfig):
    """Exact boundary trace of the disk problem with ``a = 1``, constant ``b`` and ``f = 0``."""
    c = cfg["coefficients"]
    a, b, f = _constant(c["a"]), _constant(c["b"]), _constant(c["f"])
    if not (a == 1.0 and b is not None and f == 0.0):
        raise ConfigError("coefficients.exact", "no exact solution available; set a = 1, constant b, f = 0 or give exact")
    M = 4096
    th = 2 * np.pi * np.arange(M) / M
    t0 = cfg["time"]["t0"]
    v0 = np.broadcast_to(Expression(c["v0"])(np.cos(th), np.sin(th), t0), (M,))
    chat = np.fft.rfft(v0) / M
    ks = np.arange(chat.size)
    weight = np.where((ks == 0) | (ks == M // 2), 1.0, 2.0)
    keep = np.abs(chat) > 1e-15
    ks, chat, weight = ks[keep], chat[keep], weight[keep]

    def exact(x1, x2, t):
        ang = np.arctan2(x2, x1)
        r = np.hypot(x1, x2)
        terms = weight[:, None] * (chat[:, None] * np.exp(1j * ks[:, None] * ang[None, :])).real
        decay = np.exp(-(ks + b) * (t - t0))[:, None] * r[None, :] ** ks[:, None]
        return np.sum(terms * decay, axis=0)

    return exact


def convergence_study(cfg: ExperimentConfig, depth: int | None = None, out_dir=None) -> RunReport:
    """Rerun the experiment on a mesh ladder with ``tau`` proportional to ``h^2``.

    Level ``l`` halves the mesh size ``l`` times and divides ``tau`` by
    ``4**l``. The error is the sup error against the exact solution: the
    ``exact`` descriptor, the Fourier solution for the constant-coefficient
    disk, or the manufactured solution of the nonlinear flow.

    Raises
    ------
    ConfigError
        If ``depth < 2`` or the kind has no error to measure.
    """
    depth = cfg["experiment"]["depth"] if depth is None else depth
    if depth < 2:
        raise ConfigError("experiment.depth", f"insufficient depth {depth}: a convergence study needs depth >= 2")
    if cfg.kind == "verification-suite":
        raise ConfigError("experiment.kind", "convergence studies need a solver kind")
    report = RunReport("converge", cfg)
    g, tm = cfg["grid"], cfg["time"]
    rows = []
    start = time.perf_counter()
    try:
        exact = _exact(cfg)
        if cfg.kind == "linear-disk" and exact is None:
            exact = _fourier_exact(cfg)
        if cfg.kind == "linear-halfspace" and exact is None:
            raise ConfigError("coefficients.exact", "a half-space convergence study needs an exact solution")
        for level in range(depth):
            tau = tm["tau"] / 4**level
            t1 = time.perf_counter()
            if cfg.kind == "linear-disk":
                n_r, n_t = _disk_levels(g["n_r"], g["n_theta"], level)
                traj = _linear_disk(cfg, n_r, n_t, tau)
                err = _sup_error(traj, exact, traj.grid.boundary)
            elif cfg.kind == "linear-halfspace":
                traj = _linear_halfspace(cfg, g["h"] / 2**level, tau)
                err = _sup_error(traj, exact, _inner_half_chart(traj.grid, g["R"]))
            else:
                n_r, n_t = _disk_levels(g["n_r"], g["n_theta"], level)
                res, mf = _nonlinear_disk(cfg, n_r, n_t, tau)
                traj = res.u
                if mf is not None:
                    err = mf.error(traj)
                elif exact is not None:
                    err = _sup_error(traj, exact, traj.grid.boundary)
                else:
                    raise ConfigError("nonlinear.manufactured", "no exact solution: enable manufactured or give exact")
            rows.append({"level": level, "h": float(traj.grid.h), "tau": tau, "error": err})
            report.timing[f"level_{level}"] = time.perf_counter() - t1
        report.trajectories["trajectory"] = traj
    except (SolverError, CoefficientBoundError, ConfigError, ValueError) as exc:
        report.errors.append(_error_entry(exc, cfg.kind))
    report.tables["convergence"] = _convergence_table(rows)
    report.timing["run"] = time.perf_counter() - start
    if out_dir is not None:
        write_outputs(report, out_dir)
    return report


def _convergence_table(rows: list[dict]) -> dict:
    orders = []
    for a, b in zip(rows, rows[1:]):
        if a["error"] > 0 and b["error"] > 0:
            orders.append(math.log(a["error"] / b["error"]) / math.log(a["h"] / b["h"]))
        else:
            orders.append(None)
    fitted = None
    if len(rows) >= 2 and all(r["error"] > 0 for r in rows):
        fitted = float(np.polyfit(np.log([r["h"] for r in rows]), np.log([r["error"] for r in rows]), 1)[0])
    monotone = all(b["error"] < a["error"] for a, b in zip(rows, rows[1:]))
    return {"rows": rows, "orders": orders, "fitted_order": fitted, "monotone": monotone}


# ----------------------------------------------------------------------
# output


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_outputs(report: RunReport, out_dir) -> list[Path]:
    """Write the report, timing, CSV dumps and (for studies) ``convergence.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    mode = report.config["experiment"]["csv"]
    if mode != "none":
        for name, traj in sorted(report.trajectories.items()):
            nodes = traj.grid.boundary if mode == "boundary" else None
            fname = "trajectory.csv" if name == "trajectory" else f"trajectory_{name}.csv"
            traj.to_csv(out / fname, nodes)
            written.append(out / fname)
    conv = report.tables.get("convergence")
    if conv is not None:
        lines = ["level,h,tau,error"] + [f"{r['level']},{r['h']!r},{r['tau']!r},{r['error']!r}" for r in conv["rows"]]
        _atomic_write(out / CONVERGENCE_NAME, "\n".join(lines) + "\n")
        written.append(out / CONVERGENCE_NAME)
    _atomic_write(out / TIMING_NAME, json.dumps(_clean(report.timing), sort_keys=True, indent=2) + "\n")
    _atomic_write(out / REPORT_NAME, report.to_json())
    written += [out / TIMING_NAME, out / REPORT_NAME]
    return written
