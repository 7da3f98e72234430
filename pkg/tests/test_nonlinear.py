import numpy as np
import pytest

from bdlab.evolution import CoefficientField, LinearProblem, State, run_linear, step_linear
from bdlab.grid import build_disk_grid
from bdlab.nonlinear import (
    BandViolation,
    NonContraction,
    NonlinearConfig,
    _Context,
    _apply_map,
    fixed_point_solve,
    harmonic_extension,
    linearized_step,
    positivity_bounds,
    sigma_continuation,
)
from bdlab.problems import manufactured_flow

from conftest import synthetic


@pytest.fixture(scope="module")
def grid():
    return build_disk_grid(17, 64)


def _ctx(grid, u0, cfg, coeffs=None):
    U0 = harmonic_extension(grid, u0, cfg.cg_tol).values
    return _Context(grid, U0, coeffs or CoefficientField(), cfg)


def test_harmonic_extension(grid):
    np.testing.assert_allclose(harmonic_extension(grid, 3.0).values, 3.0, atol=1e-9)
    fine = build_disk_grid(33, 128)
    errs = []
    for g in (grid, fine):
        U = harmonic_extension(g, "2 + cos(theta)").values
        errs.append(np.max(np.abs(U - (2 + g.points[:, 0]))))
        assert U.min() >= 1.0 - 1e-9 and U.max() <= 3.0 + 1e-9
    assert errs[0] / errs[1] >= 3.0
    with pytest.raises(ValueError, match="positive"):
        harmonic_extension(grid, "cos(theta)")


def test_sigma_zero_gives_trivial_solution(grid):
    cfg = NonlinearConfig(p=2, T=0.125, tau=1 / 32)
    ctx = _ctx(grid, "2 + 0.5*cos(theta)", cfg, CoefficientField(f="1 + t"))
    psi = _apply_map(ctx, np.zeros((ctx.times.size, grid.n_nodes)), 0.0)
    assert np.max(np.abs(psi)) <= 1e-12


def test_p_one_step_is_linear_step(grid):
    cfg = NonlinearConfig(p=1, T=1 / 16, tau=1 / 16, cg_tol=1e-13)
    coeffs = CoefficientField(b=0.5, f="cos(theta) + t")
    ctx = _ctx(grid, "2 + 0.5*cos(theta)", cfg, coeffs)
    w = np.random.default_rng(0).uniform(-0.5, 0.5, grid.n_nodes)
    psi1 = linearized_step(ctx, np.zeros(grid.n_nodes), w, 1, 1.0)
    prob = LinearProblem(grid, coeffs, v0="2 + 0.5*cos(theta)", tau=cfg.tau, tol=1e-13)
    s1 = step_linear(prob, State(0.0, ctx.U0.copy()))
    np.testing.assert_allclose(ctx.U0 + psi1, s1.values, atol=1e-9)


def test_p_two_scalar_update(grid):
    c, F, tau = 1.5, 0.7, 1 / 8
    cfg = NonlinearConfig(p=2, T=tau, tau=tau, cg_tol=1e-13)
    ctx = _ctx(grid, c, cfg, CoefficientField(f=F))
    psi1 = linearized_step(ctx, np.zeros(grid.n_nodes), np.zeros(grid.n_nodes), 1, 1.0)
    # (2c) psi / tau = F with psi spatially constant
    np.testing.assert_allclose(psi1, F * tau / (2 * c), atol=1e-10)


def test_constant_data_is_a_fixed_point(grid):
    res = fixed_point_solve(grid, 2.5, NonlinearConfig(p=2, T=0.25, tau=1 / 16))
    assert res.iterations == 1
    np.testing.assert_allclose(res.u.values, 2.5, atol=1e-10)


def test_p_one_matches_linear_solver(grid):
    u0 = "2 + 0.5*cos(theta) + 0.25*sin(2*theta)"
    coeffs = CoefficientField(b=0.5, f="cos(theta)*exp(-t)")
    cfg = NonlinearConfig(p=1, T=0.25, tau=1 / 32, tol=1e-12, cg_tol=1e-14)
    res = fixed_point_solve(grid, u0, cfg, coeffs)
    lin = run_linear(LinearProblem(grid, coeffs, v0=u0, tau=1 / 32, tol=1e-14), 0.25)
    assert np.max(np.abs(res.u.values - lin.values)) <= 1e-9


@pytest.mark.parametrize("p", [0.5, 2.0])
def test_manufactured_recovery(p):
    mf = manufactured_flow(p, b=0.5)
    levels = [(17, 64, 1 / 64), (33, 128, 1 / 256)]
    errs, consts = [], []
    for n_r, n_t, tau in levels:
        g = build_disk_grid(n_r, n_t)
        res = fixed_point_solve(g, mf.u0, NonlinearConfig(p=p, T=0.25, tau=tau), mf.coeffs)
        assert np.all(res.contraction_ratios <= 0.9)
        assert not positivity_bounds(res.u, 8.0).violated
        e = mf.error(res.u)
        errs.append(e)
        consts.append(e / (g.h**2 + tau))
    assert errs[1] < errs[0]
    assert abs(consts[1] - consts[0]) / consts[0] <= 0.25


def test_continuation_schedules(grid):
    mf = manufactured_flow(2.0, b=0.5)
    base = dict(p=2.0, T=0.25, tau=1 / 64)
    direct = fixed_point_solve(grid, mf.u0, NonlinearConfig(**base), mf.coeffs)
    cont = sigma_continuation(grid, mf.u0, NonlinearConfig(**base, sigma_schedule=(0, 0.5, 1)), mf.coeffs)
    assert [s for s, _ in cont.history] == [0.0, 0.5, 1.0]
    assert mf.error(cont.u) <= 2 * mf.error(direct.u)
    one = sigma_continuation(grid, mf.u0, NonlinearConfig(**base, sigma_schedule=(1,)), mf.coeffs)
    np.testing.assert_array_equal(one.u.values, direct.u.values)
    zero = sigma_continuation(grid, mf.u0, NonlinearConfig(**base, sigma_schedule=(0,)), mf.coeffs)
    assert np.max(np.abs(zero.psi)) <= 1e-12


def test_positivity(grid):
    times = np.linspace(0, 0.5, 9)
    const = synthetic(grid, lambda x1, x2, t: 2.0 + 0 * x1, times)
    rep = positivity_bounds(const, 8.0)
    assert (rep.min, rep.max, rep.violated) == (2.0, 2.0, False)
    mf = manufactured_flow(2.0)
    exact = synthetic(grid, mf.exact, times)
    assert not positivity_bounds(exact, (0.5, 4.0)).violated
    dip = synthetic(grid, lambda x1, x2, t: 1.0 - t * 2.5 + 0 * x1, times)
    assert positivity_bounds(dip, 8.0).violated


def test_failures_are_reported(grid):
    mf = manufactured_flow(2.0, b=0.5)
    with pytest.raises(NonContraction, match="shorten"):
        fixed_point_solve(grid, mf.u0, NonlinearConfig(p=2, T=0.25, tau=1 / 16, max_iter=1), mf.coeffs)
    with pytest.raises(BandViolation, match="outside"):
        fixed_point_solve(grid, mf.u0, NonlinearConfig(p=2, band=1.5, T=0.25, tau=1 / 16), mf.coeffs)


@pytest.mark.parametrize(
    "kw",
    [dict(p=0), dict(band=1.0), dict(tol=0), dict(max_iter=0), dict(sigma_schedule=(0.5, 1)), dict(T=0.3, tau=0.25)],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        NonlinearConfig(**kw)
