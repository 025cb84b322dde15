import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, solve_ivp

from fringelab import exact
from fringelab.exact import ExactExpValue, ExpPoly, beta_hat, beta_hat_alt, g_poly, kernel_integral
from fringelab.tree import LEAF, NAMED, NotFullError, Tree, full_shapes, mirror, parse_shape

E = ExactExpValue

# closed forms to freeze (compressed BST constants)
GB = {
    "t2": E({4: Fraction(1, 128), 2: Fraction(-1, 8), 0: Fraction(233, 384)}),
    "t3": E({6: Fraction(1, 1728), 4: Fraction(-1, 256), 2: Fraction(-3, 64), 0: Fraction(2447, 6912)}),
    "t4a": E({8: Fraction(1, 32768), 6: Fraction(-1, 4608), 2: Fraction(-11, 512),
              0: Fraction(47503, 294912)}),
    "t4c": E({8: Fraction(1, 16384), 6: Fraction(-1, 1728), 4: Fraction(1, 1024),
              2: Fraction(-1, 64), 0: Fraction(54973, 442368)}),
}
GB_FLOAT = {"t2": 0.1097, "t3": 0.0279, "t4a": 0.0057, "t4c": 0.0106}


# ---------------------------------------------------------------------------
# exp-polynomial arithmetic
# ---------------------------------------------------------------------------

exp_polys = st.dictionaries(
    st.integers(0, 6),
    st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=7), min_size=1, max_size=4),
    max_size=4,
).map(ExpPoly)


@given(exp_polys, exp_polys)
def test_ring_operations_match_pointwise(f, g):
    for x in (0.0, 0.3, 0.9):
        assert (f + g)(x) == pytest.approx(f(x) + g(x), rel=1e-9, abs=1e-9)
        assert (f * g)(x) == pytest.approx(f(x) * g(x), rel=1e-9, abs=1e-7)


@given(exp_polys)
def test_kernel_integral_differential_identity(f):
    F = kernel_integral(f)
    assert F.at_zero() == 0
    assert F.deriv() == f + F.scale(2)


@given(exp_polys)
@settings(max_examples=40)
def test_integrate_01_against_quadrature(f):
    value = float(f.integrate_01())
    ref, _ = quad(f, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    assert value == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_exact_value_string_and_decimal():
    assert str(GB["t2"]) == "e^4/128 - e^2/8 + 233/384"
    assert str(E({0: Fraction(-1, 3)})) == "-1/3"
    d = GB["t2"].to_decimal(40)
    assert abs(float(d) - (math.e ** 4 / 128 - math.e ** 2 / 8 + 233 / 384)) < 1e-14


# ---------------------------------------------------------------------------
# generating functions and beta-hat
# ---------------------------------------------------------------------------

def test_g_leaf_and_cherry_closed_forms():
    assert g_poly(LEAF) == ExpPoly({2: (Fraction(1, 2),), 0: (Fraction(-1, 2),)})
    expected = ExpPoly({4: (Fraction(1, 8),), 2: (0, Fraction(-1, 2)), 0: (Fraction(-1, 8),)})
    assert g_poly(NAMED["t2"]) == expected


@pytest.mark.parametrize("m", range(2, 7))
def test_g_recursion_identity_up_to_six_leaves(m):
    for t in full_shapes(m):
        g = g_poly(t)
        assert g.at_zero() == 0
        assert g.deriv() == g.scale(2) + g_poly(t.left) * g_poly(t.right)
        assert all(k % 2 == 0 for k in g.exponents())


@pytest.mark.parametrize("name", ["t2", "t3", "t4a", "t4c"])
def test_beta_hat_closed_forms(name):
    assert beta_hat(NAMED[name]) == GB[name]
    assert float(beta_hat(NAMED[name])) == pytest.approx(GB_FLOAT[name], abs=5e-5)


def test_beta_hat_leaf():
    assert beta_hat(LEAF) == Fraction(1, 3)


@pytest.mark.parametrize("m", range(2, 7))
def test_two_integral_forms_agree(m):
    for t in full_shapes(m):
        assert beta_hat(t) == beta_hat_alt(t)


@pytest.mark.parametrize("m", range(2, 7))
def test_mirror_symmetry(m):
    for t in full_shapes(m):
        assert beta_hat(mirror(t)) == beta_hat(t)


def _ode_beta_hat(t: Tree) -> float:
    """Numerical oracle: integrate G' = 2G + G_L G_R for every subtree, then quadrature."""
    subtrees: list[Tree] = []

    def collect(v):
        if v.is_leaf or v in subtrees:
            return
        collect(v.left)
        collect(v.right)
        subtrees.append(v)

    collect(t)
    index = {v: i for i, v in enumerate(subtrees)}

    def g_of(v, y, x):
        return 0.5 * (math.exp(2 * x) - 1) if v.is_leaf else y[index[v]]

    def rhs(x, y):
        return [2 * y[index[v]] + g_of(v.left, y, x) * g_of(v.right, y, x) for v in subtrees]

    if t.is_leaf:
        return 1 / 3
    sol = solve_ivp(rhs, (0, 1), np.zeros(len(subtrees)), dense_output=True, rtol=1e-12, atol=1e-14)

    def integrand(x):
        y = sol.sol(x)
        return (1 - x) ** 2 * g_of(t.left, y, x) * g_of(t.right, y, x)

    return quad(integrand, 0, 1, epsabs=1e-13, epsrel=1e-12)[0]


@pytest.mark.parametrize("shape", ["(*,*)", "(*,(*,*))", "((*,*),(*,*))", "((*,(*,*)),((*,*),*))"])
def test_beta_hat_against_numerical_ode(shape):
    t = parse_shape(shape)
    assert float(beta_hat(t)) == pytest.approx(_ode_beta_hat(t), rel=1e-8)


def test_beta_hat_rejects_general_trees():
    with pytest.raises(NotFullError):
        beta_hat(Tree(LEAF, None))


def test_beta_hat_mass_below_two_thirds():
    total = sum((beta_hat(t) for m in range(1, 7) for t in full_shapes(m)), E())
    assert 0.55 < float(total) < 2 / 3


# ---------------------------------------------------------------------------
# shape probabilities
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", range(1, 11))
def test_bst_distribution_sums_to_one(n):
    dist = exact.bst_shape_distribution(n)
    assert dist.total() == 1
    assert len(dist) == math.comb(2 * n, n) // (n + 1)


def test_bst_distribution_guard():
    with pytest.raises(ValueError):
        exact.bst_shape_distribution(13)


def test_bst_shape_prob_small():
    assert exact.bst_shape_prob(parse_shape("(*,*)")) == Fraction(1, 3)
    assert exact.bst_shape_prob(parse_shape("((*,-),-)")) == Fraction(1, 6)


def test_cb_probabilities():
    assert exact.cb_shape_prob(NAMED["t3"]) == Fraction(1, 2)
    assert exact.cb_shape_prob(NAMED["t4a"]) == Fraction(2, 11)
    assert exact.cb_shape_prob(NAMED["t4c"]) == Fraction(3, 11)
    for m in range(2, 8):
        assert exact.cb_shape_distribution(m).total() == 1


@pytest.mark.parametrize("p", [Fraction(1, 2), Fraction(1, 3), Fraction(2, 7)])
def test_pi_t_closed_forms(p):
    q = 1 - p
    assert exact.pi_t(NAMED["t2"], p) == 2 * p * q
    assert exact.pi_t(NAMED["t3"], p) == 3 * p ** 2 * q
    assert exact.pi_t(NAMED["t4a"], p) == 4 * p ** 4 * q
    assert exact.pi_t(NAMED["t4b"], p) == 4 * p ** 3 * q ** 2
    assert exact.pi_t(NAMED["t4c"], p) == 6 * p ** 2 * q ** 2


@pytest.mark.parametrize("m", range(2, 7))
def test_patricia_law_sums_to_one(m):
    p = Fraction(3, 10)
    assert sum(exact.patricia_shape_prob(t, p) for t in full_shapes(m)) == 1


def test_pi_t_float_and_mirror():
    t = NAMED["t4b"]
    assert exact.pi_t(t, 0.3) == pytest.approx(float(exact.pi_t(t, Fraction(3, 10))), rel=1e-14)
    assert exact.pi_t(mirror(t), Fraction(1, 3)) == exact.pi_t(t, Fraction(2, 3))
    with pytest.raises(ValueError):
        exact.pi_t(t, 1.0)


# ---------------------------------------------------------------------------
# limit constants of the other models
# ---------------------------------------------------------------------------

def test_ebst_constants():
    assert exact.ebst_limit(NAMED["t2"]) == Fraction(1, 6)
    assert exact.ebst_limit(NAMED["t3"]) == Fraction(1, 24)
    assert exact.ebst_limit(NAMED["t4a"]) == Fraction(1, 120)
    assert exact.ebst_limit(NAMED["t4c"]) == Fraction(1, 60)
    # leaves carry 1/2 and m-leaf shapes 1/(m(m+1)), which telescopes to total mass 1
    assert exact.ebst_limit(LEAF) == Fraction(1, 2)
    by_size = [sum(exact.ebst_limit(t) for t in full_shapes(m)) for m in range(2, 8)]
    assert by_size == [Fraction(1, m * (m + 1)) for m in range(2, 8)]


def test_cb_limits():
    assert float(exact.cb_limit(NAMED["t4a"]).fringe) == pytest.approx(1 / (12 * math.pi ** 2))
    assert exact.cb_limit(NAMED["t2"]).fringe.coeff == Fraction(3, 2)
    assert exact.cb_limit(NAMED["t4c"]).r / exact.cb_limit(NAMED["t4a"]).r == Fraction(3, 2)


def test_uniform_constants():
    assert exact.uniform_limit(NAMED["t3"]) == Fraction(1, 32)
    assert exact.uniform_qsin(NAMED["t3"]) == Fraction(3, 16)
    assert exact.uniform_variance(2) == Fraction(1, 32)
    for m in range(2, 12):
        assert exact.uniform_variance(m) > 0
