import numpy as np
import pytest

from bdlab.elliptic import assemble
from bdlab.evolution import (
    CoefficientField,
    LinearProblem,
    check_compatibility,
    fit_decay_rate,
    initial_state,
    mode_coefficients,
    run_linear,
    steklov_average,
    step_linear,
)
from bdlab.grid import build_disk_grid
from bdlab.problems import halfspace_forced, halfspace_mode, solve

from conftest import synthetic


def test_steady_constant_state():
    g = build_disk_grid(9, 32)
    beta, c = 0.7, 1.5
    prob = LinearProblem(g, CoefficientField(b=beta, f=beta * c), v0=c, tau=0.1)
    s1 = step_linear(prob, initial_state(prob))
    np.testing.assert_allclose(s1.values, c, atol=1e-9)


def test_one_step_mode_factor():
    g = build_disk_grid(64, 256)
    tau = 1 / 16
    for k in (1, 2, 3):
        prob = LinearProblem(g, CoefficientField(), v0=f"cos({k}*theta)", tau=tau)
        s1 = step_linear(prob, initial_state(prob))
        traj_c = s1.values[g.boundary] @ np.cos(k * g.theta[g.boundary]) * 2 / 256
        assert traj_c == pytest.approx(1 / (1 + tau * k), rel=0.02)


def test_halfspace_one_step_decay():
    ep = halfspace_mode(1 / 32, 1 / 256, t0=0.0, T=1 / 256)
    traj = solve(ep)
    assert ep.error(traj) <= 2e-3


def test_run_linear_mode_one():
    g = build_disk_grid(64, 256)
    traj = run_linear(LinearProblem(g, v0="cos(theta)", tau=1 / 64), 1.0)
    c = mode_coefficients(traj, 1)
    assert c[-1] == pytest.approx(np.exp(-1.0), rel=0.03)


def test_zero_stays_zero():
    g = build_disk_grid(9, 32)
    traj = run_linear(LinearProblem(g, v0=0.0, tau=0.25), 1.0)
    assert np.all(traj.values == 0.0)


def test_superposition_of_modes():
    g = build_disk_grid(33, 128)
    tau = 1 / 64

    def run(v0):
        return run_linear(LinearProblem(g, v0=v0, tau=tau, tol=1e-13), 1.0)

    both = run("cos(theta) + cos(2*theta)")
    split = run("cos(theta)").values + run("cos(2*theta)").values
    np.testing.assert_allclose(both.values, split, atol=1e-9)
    m = np.arange(both.times.size)
    for k in (1, 2):
        c = mode_coefficients(both, k)
        np.testing.assert_allclose(c, (1 + tau * k) ** -m, rtol=0.03)


@pytest.mark.parametrize("b", [0.0, 0.5])
def test_decay_rates(b):
    g = build_disk_grid(64, 256)
    v0 = "cos(theta) + cos(2*theta) + cos(3*theta)"
    traj = run_linear(LinearProblem(g, CoefficientField(b=b), v0=v0, tau=1 / 128), 1.0)
    for k in (1, 2, 3):
        rate = fit_decay_rate(traj.times, mode_coefficients(traj, k))
        assert rate == pytest.approx(k + b, rel=0.03)


def test_interior_is_harmonic_at_every_stamp(mode32):
    op = assemble(mode32.grid)
    assert mode32.harmonic_residual(op) <= 1e-8


def test_time_dependent_coefficients_stay_harmonic():
    ep = halfspace_forced(1 / 16, 1 / 32)
    traj = solve(ep)
    assert np.all(np.diff(traj.times) > 0)
    # time-dependent a: check each stamp against its own operator
    for m in (1, traj.times.size // 2, traj.times.size - 1):
        op = ep.problem.operator(traj.times[m])
        r = (op.K @ traj.values[m])[op.free]
        assert np.max(np.abs(r)) <= 1e-8 * np.max(np.abs(op.K.diagonal())) * np.max(np.abs(traj.values))


def test_horizon_must_be_multiple_of_tau():
    g = build_disk_grid(5, 16)
    with pytest.raises(ValueError, match="multiple"):
        run_linear(LinearProblem(g, v0=1.0, tau=0.3), 1.0)


def test_compat_constant_trajectory(halfspace_axis):
    g, times = halfspace_axis
    rep = check_compatibility(synthetic(g, lambda x1, x2, t: 2.0 + 0 * x1, times), 0.5)
    assert rep.numerator == pytest.approx(0.0, abs=1e-20)
    assert rep.ratio == pytest.approx(0.0, abs=1e-20)


def test_compat_exact_mode_pin(mode32, mode64, pins):
    r32 = check_compatibility(mode32, 1.0).ratio
    r64 = check_compatibility(mode64, 1.0).ratio
    assert r64 == pytest.approx(pins["COMPAT_E"], rel=0.05)
    assert abs(r64 - r32) / r32 <= 0.2


def test_compat_disk_chart(disk_coarse, pins):
    from bdlab.problems import disk_mode

    fine = solve(disk_mode(33, 128, 1 / 64))
    for traj in (disk_coarse, fine):
        rep = check_compatibility(traj, 0.5, center=(1.0, 0.0), t_center=0.5)
        assert np.isfinite(rep.ratio)
        assert rep.ratio <= 1.1 * pins["COMPAT_E_disk_chart"]


def test_steklov_average_cases(halfspace_axis):
    g, times = halfspace_axis
    const = synthetic(g, lambda x1, x2, t: 1.0 + x1, times)
    s = steklov_average(const, 0.125)
    np.testing.assert_allclose(s.values, const.values[: s.times.size], atol=1e-14)
    lin = synthetic(g, lambda x1, x2, t: t + 0 * x1, times)
    s = steklov_average(lin, 0.25)
    np.testing.assert_allclose(s.values, np.broadcast_to(s.times[:, None] + 0.125, s.values.shape), atol=1e-14)


def test_steklov_converges_linearly(mode32):
    errs = []
    for hs in (1 / 8, 1 / 16):
        s = steklov_average(mode32, hs)
        errs.append(np.max(np.abs(s.values - mode32.values[: s.times.size])))
    assert errs[0] / errs[1] >= 1.8


def test_csv_layout(tmp_path, disk_small):
    traj = synthetic(disk_small, lambda x1, x2, t: x1 + t, np.array([0.0, 0.5]))
    path = tmp_path / "traj.csv"
    traj.to_csv(path, disk_small.boundary)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2,on_boundary,value"
    assert len(lines) == 1 + 2 * disk_small.boundary.size
    t, x1, x2, onb, v = lines[-1].split(",")
    assert float(v) == pytest.approx(float(x1) + float(t))
    assert onb == "1"
