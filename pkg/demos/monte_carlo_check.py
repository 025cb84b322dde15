"""Simulated fringe counts against the limit constants.

A modest run for each model: the empirical fringe probability of t2 and
t3 next to its prediction, with a z-score. Larger runs go through the
command line, e.g. ``fringelab compare --model cbst --n 1e4 --reps 500``.
"""
from fractions import Fraction

from fringelab import mclab
from fringelab.samplers import ModelSpec
from fringelab.tree import NAMED

shapes = (NAMED["t2"].code, NAMED["t3"].code)
for spec in (ModelSpec("patricia", 2000, p=Fraction(1, 2)), ModelSpec("ebst", 2000), ModelSpec("cbst", 2000),
             ModelSpec("cb", 2000), ModelSpec("uniform", 2000)):
    stats = mclab.run(mclab.ExperimentPlan(spec, (spec.n,), 60, K=3, master_seed=1, shapes=shapes))
    report = mclab.compare(stats)
    for row in report.rows:
        if row.stat == "fringe_prob":
            print(f"{spec.model:12s} {row.shape_code:6s} {row.value:.4f} vs {row.predicted:.4f}  z={row.z:+.2f}")

# exact expectations at small n, the same quantities without sampling noise
for n in (4, 6, 8, 10):
    print(n, mclab.oracle_bst_expectation(NAMED["t2"], n), mclab.oracle_uniform_expectation(NAMED["t2"], n))
