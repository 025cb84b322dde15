"""Periodic fluctuations in Patricia tries.

For p = 1/2 the mean count E N_t / n does not converge. It follows a
function of log n with period log 2 whose amplitude is tiny for small
shapes and grows with the number of leaves. An irrational ratio
log p / log q removes the oscillation altogether.
"""
import math
from fractions import Fraction

from fringelab import asymptotics, mclab
from fringelab.tree import NAMED

for name in ("t2", "t3", "t4a"):
    f = asymptotics.patricia_mean_const(NAMED[name], Fraction(1, 2))
    print(f"{name}: constant {f.constant:.10f}  relative amplitude {2 * abs(f.coefficient(1)) / f.constant:.2e}")

d = math.log(2)
for m in (2, 3, 4, 10, 100):
    print(f"m={m:3d}  |Gamma(m-1-2 pi i/d)|/Gamma(m-1) = {asymptotics.oscillation_ratio(m, d):.3e}")

print("p=1/2:", asymptotics.detect_period(Fraction(1, 2)), " p=1/3:", asymptotics.detect_period(Fraction(1, 3)))

# variance constant, computed by two independent Mellin routes
t = NAMED["t2"]
for method in ("levels", "series"):
    v = asymptotics.patricia_var_const(t, Fraction(1, 2), v_method=method)
    print(f"Var N_t2 / n constant ({method}): {v.constant:.12f}")

# a short simulation across one period; the amplitude is far below the noise
scan = mclab.oscillation_scan(NAMED["t2"], Fraction(1, 2), mclab.geometric_grid(9, 10, 4), reps=20)
for pt in scan.points:
    print(f"n={pt.n:5d} phase={pt.phase:.2f} empirical={pt.empirical:.5f} +- {pt.se:.5f} predicted={pt.predicted:.7f}")
print(f"amplitude / SE = {scan.amplitude_to_se:.2e}")
