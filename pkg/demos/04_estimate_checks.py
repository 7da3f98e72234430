"""Empirical constants of the regularity estimates
==============================================

Every check evaluates both sides of an estimate on a computed trajectory and
reports their quotient. The constants themselves are unknown, so what we
look for is a quotient that ignores data scaling and settles under mesh
refinement. This runs a one-level suite on coarse grids (a few seconds) and
prints the quotients.
"""
from bdlab.config import parse_config
from bdlab.problems import halfspace_mode, solve
from bdlab.verifier import check_caccioppoli_I, check_iteration_decay, run_verification_suite

cfg = parse_config(
    """
[experiment]
kind = verification-suite
depth = 1
[verification]
h = 1/16
tau = 1/32
n_r = 9
n_theta = 32
disk_tau = 1/16
"""
)
for rep in run_verification_suite(cfg):
    print(f"{rep.id:16s} lhs {rep.lhs:11.4e}  rhs {rep.rhs:11.4e}  ratio {rep.ratio:.4f}")

traj = solve(halfspace_mode(1 / 32, 1 / 128))
base = check_caccioppoli_I(traj, 0.5, 1.0).ratio
scaled = check_caccioppoli_I(traj.scaled(1e3), 0.5, 1.0).ratio
print(f"\nscaling u by 1000 changes the first Caccioppoli ratio by {abs(scaled - base) / base:.1e}")
slope = check_iteration_decay(traj, [0.5, 0.25, 0.125], 1.0).meta["slope"]
print(f"oscillation excess decays like rho^{slope:.2f} (the estimate predicts exponent 2)")
