"""Decay of boundary modes under the dynamic condition
===================================================

With ``a = 1`` and constant ``b`` each boundary mode ``cos(k theta)`` decays
like ``exp(-(k + b) t)``. This runs the shipped ``linear-disk`` experiment
and prints its mode table, then a short refinement study on a coarser disk.
"""
import tempfile

from bdlab.config import load_config
from bdlab.experiment import convergence_study, run_experiment

with tempfile.TemporaryDirectory() as out:
    report = run_experiment(load_config("linear-disk"), out)
print(" k   fitted rate   expected   relative error")
for row in report.tables["mode_decay"]:
    print(f"{row['k']:2d}   {row['rate']:10.5f}   {row['expected']:8.3f}   {row['rel_error']:.2%}")

study = convergence_study(load_config("disk-convergence"), 3)
table = study.tables["convergence"]
print("\n     h         tau        sup error")
for row in table["rows"]:
    print(f"{row['h']:.5f}  {row['tau']:.6f}  {row['error']:.3e}")
print(f"fitted order {table['fitted_order']:.3f} (tau shrinks with h^2)")
