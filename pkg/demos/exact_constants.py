"""Exact fringe constants for the compressed binary search tree.

Each shape t gets an exp-polynomial G_t built bottom-up, and the limit of
N_t / n is an integral of it over [0, 1]. The result is a finite sum of
rational multiples of e^k, printed here next to its decimal value.
"""
from fringelab import exact
from fringelab.tree import NAMED, format_shape, full_shapes

for name in ("t2", "t3", "t4a", "t4b", "t4c"):
    t = NAMED[name]
    value = exact.beta_hat(t)
    print(f"{name:4s} {format_shape(t):22s} {value}")
    print(f"     G_t = {exact.g_poly(t)}")
    print(f"     = {value.to_decimal(25)}")

# mass carried by small shapes; the full sum over all shapes is 2/3
for m in range(1, 9):
    total = sum((exact.beta_hat(t) for k in range(1, m + 1) for t in full_shapes(k)), exact.ExactExpValue())
    print(f"shapes with <= {m} leaves: {float(total):.15f}")

# the other models for comparison, all rational or a rational over pi^2
t = NAMED["t4c"]
print("ebst", exact.ebst_limit(t), " cb", exact.cb_limit(t).fringe, " uniform", exact.uniform_limit(t))
