"""Acceptance criteria AC1 to AC9.

Each test prints one ``ACn PASS|FAIL`` line with the measured numbers
straight to the terminal (capture is bypassed) and then asserts the same
condition at the stated tolerance. Run alone with::

    pytest -v tests/test_acceptance.py
"""
from __future__ import annotations

import subprocess
import sys
import time

import numpy as np
import pytest

from bdlab.config import load_config
from bdlab.elliptic import dtn_apply
from bdlab.evolution import CoefficientField, LinearProblem, fit_decay_rate, mode_coefficients, run_linear
from bdlab.experiment import convergence_study
from bdlab.grid import build_disk_grid
from bdlab.nonlinear import NonlinearConfig, fixed_point_solve, positivity_bounds
from bdlab.problems import disk_mode, halfspace_forced, halfspace_mode, manufactured_flow, solve
from bdlab.verifier import (
    check_caccioppoli_I,
    check_caccioppoli_II,
    check_caccioppoli_III,
    check_compat,
    check_iteration_decay,
    check_schauder_global,
    check_schauder_local,
)


@pytest.fixture
def verdict(capsys):
    def emit(ac: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{ac} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, f"{ac}: {detail}"

    return emit


def _drift(a: float, b: float) -> float:
    return abs(b - a) / abs(a)


def test_ac1_dtn_spectrum(verdict):
    start = time.perf_counter()

    def errors(n_r, n_t):
        g = build_disk_grid(n_r, n_t)
        th = g.theta[g.boundary]
        out = []
        for k in range(1, 5):
            got = dtn_apply(g, 1.0, np.cos(k * th))
            out.append(np.linalg.norm(got - k * np.cos(k * th)) / np.linalg.norm(k * np.cos(k * th)))
        return np.array(out)

    at64 = errors(64, 256)
    coarse, fine = errors(33, 128), errors(65, 256)
    gain = coarse / fine
    elapsed = time.perf_counter() - start
    ok = at64.max() <= 0.02 and gain.min() >= 3 and elapsed <= 60
    verdict("AC1", ok, f"max rel err {at64.max():.2e} (<= 2%), min gain under halving {gain.min():.2f} (>= 3), {elapsed:.1f}s")


def test_ac2_linear_decay(verdict):
    start = time.perf_counter()
    g = build_disk_grid(64, 256)
    worst = 0.0
    for b in (0.0, 0.5):
        prob = LinearProblem(g, CoefficientField(b=b), v0="cos(theta) + cos(2*theta) + cos(3*theta)", tau=1 / 128)
        traj = run_linear(prob, 1.0)
        for k in (1, 2, 3):
            rate = fit_decay_rate(traj.times, mode_coefficients(traj, k))
            worst = max(worst, abs(rate - (k + b)) / (k + b))
    elapsed = time.perf_counter() - start
    verdict("AC2", worst <= 0.03 and elapsed <= 120, f"worst rate error {worst:.2%} (<= 3%), {elapsed:.1f}s")


def test_ac3_halfspace_exact(verdict):
    start = time.perf_counter()
    table = convergence_study(load_config("linear-halfspace"), 3).tables["convergence"]
    elapsed = time.perf_counter() - start
    rows = table["rows"]
    consts = [r["error"] / (r["h"] ** 2 + r["tau"]) for r in rows]
    bounded = max(consts) <= 2 * min(consts)
    errs = ", ".join(f"{r['error']:.2e}" for r in rows)
    ok = table["fitted_order"] >= 1.8 and bounded and elapsed <= 120
    verdict(
        "AC3",
        ok,
        f"errors [{errs}], C = err/(h^2+tau) in [{min(consts):.3f}, {max(consts):.3f}], "
        f"fitted order {table['fitted_order']:.3f} (>= 1.8), {elapsed:.1f}s",
    )


def test_ac4_compatibility(verdict, mode32, mode64, pins):
    r32 = check_compat(mode32, 1.0).ratio
    r64 = check_compat(mode64, 1.0).ratio
    pin_err = _drift(pins["COMPAT_E"], r64)
    drift = _drift(r32, r64)
    verdict("AC4", pin_err <= 0.05 and drift <= 0.20, f"ratio {r64:.4f} vs pin {pins['COMPAT_E']:.4f} ({pin_err:.2%} <= 5%), drift {drift:.2%} (<= 20%)")


def test_ac5_caccioppoli(verdict, mode32, mode64):
    forced = [solve(halfspace_forced(h, 4 * h * h, variable=False)) for h in (1 / 16, 1 / 32)]
    worst_scale, worst_drift, finite = 0.0, 0.0, True
    for check in (check_caccioppoli_I, check_caccioppoli_II, check_caccioppoli_III):
        for pair in ((mode32, mode64), forced):
            a, b = (check(t, 0.5, 1.0) for t in pair)
            finite &= a.ratio is not None and b.ratio is not None and np.isfinite(a.ratio) and np.isfinite(b.ratio)
            worst_drift = max(worst_drift, _drift(a.ratio, b.ratio))
            for c in (1e-3, -4.0, 250.0):
                worst_scale = max(worst_scale, _drift(a.ratio, check(pair[0].scaled(c), 0.5, 1.0).ratio))
    ok = finite and worst_scale <= 1e-9 and worst_drift <= 0.25
    verdict("AC5", ok, f"finite={finite}, max scaling change {worst_scale:.1e} (<= 1e-9), max drift {worst_drift:.2%} (<= 25%)")


def test_ac6_iteration_decay(verdict, mode64):
    ladder = [0.5, 0.25, 0.125]
    s64 = check_iteration_decay(mode64, ladder, 1.0).meta["slope"]
    mode128 = solve(halfspace_mode(1 / 128, 1 / 256))
    s128 = check_iteration_decay(mode128, ladder, 1.0).meta["slope"]
    verdict("AC6", s64 >= 1.5 and s128 >= 1.8, f"slope {s64:.3f} at h=1/64 (>= 1.5), {s128:.3f} at h=1/128 (>= 1.8)")


def test_ac7_schauder(verdict, mode32, mode64, disk_coarse, pins):
    loc = [check_schauder_local(t, 1.0, 0.5, f=0.0).ratio for t in (mode32, mode64)]
    disk_fine = solve(disk_mode(33, 128, 1 / 64))
    glob = [check_schauder_global(t, 0.5, 8, 0.2).ratio for t in (disk_coarse, disk_fine)]
    l16 = check_schauder_global(disk_coarse, 0.5, 16, 0.2)
    l8 = check_schauder_global(disk_coarse, 0.5, 8, 0.2)
    cover = _drift(l8.lhs, l16.lhs)
    pin_l = _drift(pins["SCHAUDER_LOCAL"], loc[1])
    pin_g = _drift(pins["SCHAUDER_GLOBAL"], glob[1])
    d_l, d_g = _drift(*loc), _drift(*glob)
    ok = all(np.isfinite(loc + glob)) and max(pin_l, pin_g) <= 0.10 and max(d_l, d_g) <= 0.25 and cover <= 0.10
    verdict(
        "AC7",
        ok,
        f"local {loc[1]:.4f} (pin {pin_l:.2%}, drift {d_l:.2%}), global {glob[1]:.4f} (pin {pin_g:.2%}, drift {d_g:.2%}), "
        f"8 vs 16 arcs {cover:.2%}",
    )


def test_ac8_nonlinear(verdict):
    details, ok = [], True
    for p in (0.5, 2.0):
        mf = manufactured_flow(p, b=0.5)
        errs, worst_ratio, band_ok = [], 0.0, True
        for n_r, n_t, tau in ((17, 64, 1 / 64), (33, 128, 1 / 256)):
            res = fixed_point_solve(build_disk_grid(n_r, n_t), mf.u0, NonlinearConfig(p=p, T=0.25, tau=tau), mf.coeffs)
            errs.append(mf.error(res.u))
            worst_ratio = max(worst_ratio, float(np.max(res.contraction_ratios)))
            band_ok &= not positivity_bounds(res.u, 8.0).violated
        ok &= errs[1] < errs[0] and worst_ratio <= 0.9 and band_ok
        details.append(f"p={p}: err {errs[0]:.2e}->{errs[1]:.2e}, max contraction {worst_ratio:.3f}, band ok={band_ok}")
    g = build_disk_grid(17, 64)
    u0 = "2 + 0.5*cos(theta)"
    coeffs = CoefficientField(b=0.5, f="cos(theta)*exp(-t)")
    res = fixed_point_solve(g, u0, NonlinearConfig(p=1, T=0.25, tau=1 / 64, tol=1e-12, cg_tol=1e-14), coeffs)
    lin = run_linear(LinearProblem(g, coeffs, v0=u0, tau=1 / 64, tol=1e-14), 0.25)
    gap = float(np.max(np.abs(res.u.values - lin.values)))
    ok &= gap <= 1e-9
    details.append(f"p=1 gap {gap:.1e} (<= 1e-9)")
    verdict("AC8", ok, "; ".join(details))


def test_ac9_determinism(verdict, tmp_path):
    cmds = [
        [sys.executable, "-m", "bdlab", "verify", "--config", "default", "--out", str(tmp_path / name)]
        for name in ("a", "b")
    ]
    procs = [subprocess.Popen(c, stdout=subprocess.PIPE, stderr=subprocess.PIPE) for c in cmds]
    codes = [p.wait() for p in procs]
    a = (tmp_path / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    verdict("AC9", codes == [0, 0] and a == b, f"exit codes {codes}, identical={a == b}, {len(a)} bytes")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
