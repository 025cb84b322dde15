"""
Exact shape probabilities and fringe constants.

Rationals are ``fractions.Fraction``. The compressed-BST constants live in
the ring of exp-polynomials ``sum_k p_k(x) e^{kx}`` (:class:`ExpPoly`);
definite integrals over [0, 1] of such functions are rational combinations
of the numbers ``e^k`` (:class:`ExactExpValue`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

from .tree import LEAF, NotFullError, Tree, binary_shapes, decode, delete_leaves, full_shapes, is_full

__all__ = [
    "Poly", "ExpPoly", "ExactExpValue", "ShapeDistribution", "InvPiSquared",
    "harmonic", "bst_shape_prob", "bst_shape_distribution", "cb_shape_prob",
    "cb_shape_distribution", "pi_t", "patricia_shape_prob", "kernel_integral", "g_poly", "h_poly",
    "beta_hat", "beta_hat_alt", "ebst_beta", "ebst_limit", "cb_limit", "CBLimit",
    "uniform_limit", "uniform_qsin", "uniform_variance", "MAX_BST_ENUM",
]

Number = Union[int, Fraction]
Poly = tuple  # tuple[Fraction, ...], coefficient of x**j at index j, no trailing zeros

MAX_BST_ENUM = 12


# ---------------------------------------------------------------------------
# polynomials with rational coefficients (plain tuples)
# ---------------------------------------------------------------------------

def _trim(c: list) -> tuple:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(a: tuple, b: tuple) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    c = list(a)
    for i, v in enumerate(b):
        c[i] += v
    return _trim(c)


def _pmul(a: tuple, b: tuple) -> tuple:
    if not a or not b:
        return ()
    c = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        if u:
            for j, v in enumerate(b):
                c[i + j] += u * v
    return _trim(c)


def _pscale(a: tuple, s: Number) -> tuple:
    return _trim([v * s for v in a]) if s else ()


def _pderiv(a: tuple) -> tuple:
    return tuple(Fraction(i) * a[i] for i in range(1, len(a)))


def _pantideriv(a: tuple) -> tuple:
    return _trim([Fraction(0)] + [a[i] / (i + 1) for i in range(len(a))])


def _peval(a: tuple, x):
    acc = 0
    for v in reversed(a):
        acc = acc * x + v
    return acc


def _exp_antiderivative(a: tuple, c: Fraction) -> tuple:
    """Polynomial A with (A e^{cy})' = a e^{cy}, for c != 0.

    A = sum_j (-1)^j a^{(j)} / c^{j+1}.
    """
    out: list = []
    term = a
    sign = 1
    power = c
    while term:
        out = list(_padd(tuple(out), _pscale(term, Fraction(sign) / power)))
        term = _pderiv(term)
        sign = -sign
        power *= c
    return _trim(out)


# ---------------------------------------------------------------------------
# exp-polynomials
# ---------------------------------------------------------------------------

class ExpPoly:
    """Exact element ``sum_k p_k(x) e^{kx}`` with rational polynomials ``p_k``.

    Stored as a map exponent -> coefficient tuple with zero terms dropped,
    so ``==`` is exact equality of functions.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, Iterable[Number]] | None = None):
        clean: dict[int, tuple] = {}
        for k, coeffs in (terms or {}).items():
            if k < 0 or int(k) != k:
                raise ValueError(f"exponent must be a nonnegative integer, got {k}")
            poly = _trim([Fraction(v) for v in coeffs])
            if poly:
                clean[int(k)] = poly
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def const(cls, c: Number) -> ExpPoly:
        return cls({0: (c,)})

    @classmethod
    def exp(cls, k: int, coeff: Number = 1) -> ExpPoly:
        return cls({k: (coeff,)})

    @classmethod
    def x(cls) -> ExpPoly:
        return cls({0: (0, 1)})

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ExpPoly.const(other)
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(tuple(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: ExpPoly | Number) -> ExpPoly:
        if isinstance(other, (int, Fraction)):
            other = ExpPoly.const(other)
        out = dict(self.terms)
        for k, p in other.terms.items():
            out[k] = _padd(out.get(k, ()), p)
        return ExpPoly(out)

    __radd__ = __add__

    def __neg__(self) -> ExpPoly:
        return self.scale(-1)

    def __sub__(self, other: ExpPoly | Number) -> ExpPoly:
        if isinstance(other, (int, Fraction)):
            other = ExpPoly.const(other)
        return self + (-other)

    def __mul__(self, other: ExpPoly | Number) -> ExpPoly:
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        out: dict[int, tuple] = {}
        for k1, p1 in self.terms.items():
            for k2, p2 in other.terms.items():
                out[k1 + k2] = _padd(out.get(k1 + k2, ()), _pmul(p1, p2))
        return ExpPoly(out)

    __rmul__ = __mul__

    def scale(self, s: Number) -> ExpPoly:
        s = Fraction(s)
        return ExpPoly({k: _pscale(p, s) for k, p in self.terms.items()})

    def deriv(self) -> ExpPoly:
        """d/dx of p(x)e^{kx} is (p' + k p) e^{kx}."""
        return ExpPoly({k: _padd(_pderiv(p), _pscale(p, k)) for k, p in self.terms.items()})

    def at_zero(self) -> Fraction:
        return sum((p[0] for p in self.terms.values()), Fraction(0))

    def __call__(self, x: float) -> float:
        return math.fsum(_peval(tuple(float(v) for v in p), x) * math.exp(k * x)
                         for k, p in self.terms.items())

    def exponents(self) -> list[int]:
        return list(self.terms)

    def integrate_01(self) -> ExactExpValue:
        """Exact value of the integral of this function over [0, 1]."""
        acc: dict[int, Fraction] = {}
        for k, p in self.terms.items():
            if k == 0:
                acc[0] = acc.get(0, Fraction(0)) + _peval(_pantideriv(p), Fraction(1))
                continue
            a = _exp_antiderivative(p, Fraction(k))
            acc[k] = acc.get(k, Fraction(0)) + _peval(a, Fraction(1))
            acc[0] = acc.get(0, Fraction(0)) - _peval(a, Fraction(0))
        return ExactExpValue(acc)

    def __repr__(self) -> str:
        return f"ExpPoly({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, reverse=True):
            for j in range(len(self.terms[k]) - 1, -1, -1):
                c = self.terms[k][j]
                if not c:
                    continue
                factor = "".join(
                    ([f"x^{j}" if j > 1 else "x"] if j else [])
                    + ([f"e^({k}x)"] if k else []))
                parts.append(_signed(c, factor))
        return _join(parts)


def expoly_add(f: ExpPoly, g: ExpPoly) -> ExpPoly:
    return f + g


def expoly_mul(f: ExpPoly, g: ExpPoly) -> ExpPoly:
    return f * g


def expoly_scale(f: ExpPoly, s: Number) -> ExpPoly:
    return f.scale(s)


def _signed(c: Fraction, factor: str) -> tuple[str, str]:
    sign = "-" if c < 0 else "+"
    c = abs(c)
    if not factor:
        return sign, str(c)
    if c.denominator == 1:
        body = factor if c == 1 else f"{c.numerator}{factor}"
    else:
        body = f"{factor}/{c.denominator}" if c.numerator == 1 else f"{c.numerator}{factor}/{c.denominator}"
    return sign, body


def _join(parts: list[tuple[str, str]]) -> str:
    out = []
    for i, (sign, body) in enumerate(parts):
        if i == 0:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f" {sign} {body}")
    return "".join(out) or "0"


def kernel_integral(f: ExpPoly) -> ExpPoly:
    """F(x) = integral_0^x f(y) e^{2(x-y)} dy, in closed form.

    Term by term, with c = k - 2: if c != 0 the integral of p e^{cy} is
    A(x)e^{cx} - A(0) (A from repeated integration by parts), otherwise it is
    the antiderivative of p. Multiplying by e^{2x} gives the result, which
    satisfies F(0) = 0 and F' = f + 2F.
    """
    out = ExpPoly()
    for k, p in f.terms.items():
        c = k - 2
        if c == 0:
            out = out + ExpPoly({2: _pantideriv(p)})
        else:
            a = _exp_antiderivative(p, Fraction(c))
            out = out + ExpPoly({k: a}) - ExpPoly({2: (_peval(a, Fraction(0)),)})
    return out


# ---------------------------------------------------------------------------
# exact constants  sum_k q_k e^k
# ---------------------------------------------------------------------------

class ExactExpValue:
    """The real number ``sum_k q_k e^k`` with rational ``q_k``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[int, Number] | None = None):
        self.coeffs = {int(k): Fraction(v) for k, v in sorted((coeffs or {}).items()) if v}

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ExactExpValue({0: other})
        if not isinstance(other, ExactExpValue):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(tuple(self.coeffs.items()))

    def __add__(self, other: ExactExpValue | Number) -> ExactExpValue:
        if isinstance(other, (int, Fraction)):
            other = ExactExpValue({0: other})
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return ExactExpValue(out)

    __radd__ = __add__

    def __sub__(self, other: ExactExpValue | Number) -> ExactExpValue:
        return self + (other * -1)

    def __mul__(self, s: Number) -> ExactExpValue:
        if not isinstance(s, (int, Fraction)):
            return NotImplemented
        return ExactExpValue({k: v * s for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, s: Number) -> ExactExpValue:
        return self * (Fraction(1) / Fraction(s))

    def to_decimal(self, digits: int = 40) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = digits + 10
            total = Decimal(0)
            for k, v in self.coeffs.items():
                total += Decimal(v.numerator) / Decimal(v.denominator) * Decimal(k).exp()
            ctx.prec = digits
            return +total

    def __float__(self) -> float:
        return float(self.to_decimal(30))

    def __str__(self) -> str:
        parts = [_signed(self.coeffs[k], f"e^{k}" if k else "") for k in sorted(self.coeffs, reverse=True)]
        return _join(parts)

    def __repr__(self) -> str:
        return f"ExactExpValue({self} ~ {float(self):.10f})"


# ---------------------------------------------------------------------------
# shape probabilities
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def harmonic(n: int) -> Fraction:
    """h_n = 1 + 1/2 + ... + 1/n, exactly."""
    if n <= 0:
        return Fraction(0)
    return harmonic(n - 1) + Fraction(1, n) if n < 2000 else sum(
        (Fraction(1, i) for i in range(1, n + 1)), Fraction(0))


def _subtrees_bottom_up(t: Tree) -> list[Tree]:
    order = []
    stack = [t]
    while stack:
        v = stack.pop()
        order.append(v)
        if v.left is not None:
            stack.append(v.left)
        if v.right is not None:
            stack.append(v.right)
    order.reverse()
    return order


def bst_shape_prob(t: Tree) -> Fraction:
    """P(BST_{|t|} = t).

    Recursively (1/|t|) P(left) P(right) with an empty side contributing 1,
    i.e. the product of 1/|t^v| over all nodes v.
    """
    den = 1
    for v in _subtrees_bottom_up(t):
        den *= v.size
    return Fraction(1, den)


@dataclass(frozen=True)
class ShapeDistribution:
    """Exact law of a random shape: code -> probability."""
    n: int
    probs: dict[str, Fraction]

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def __getitem__(self, t: Tree | str) -> Fraction:
        return self.probs.get(t if isinstance(t, str) else t.code, Fraction(0))

    def __len__(self) -> int:
        return len(self.probs)

    def items(self):
        return self.probs.items()


def bst_shape_distribution(n: int) -> ShapeDistribution:
    """All binary trees with ``n`` nodes and their BST probabilities (n <= 12)."""
    if not 1 <= n <= MAX_BST_ENUM:
        raise ValueError(f"bst_shape_distribution needs 1 <= n <= {MAX_BST_ENUM}, got {n}")
    return ShapeDistribution(n, {t.code: bst_shape_prob(t) for t in binary_shapes(n)})


def cb_shape_prob(t: Tree) -> Fraction:
    """P(CB_m = t) for the critical beta-splitting tree.

    The split of ``m`` leaves into ``i`` left and ``m-i`` right has
    probability (1/i + 1/(m-i)) / (2 h_{m-1}).
    """
    if not is_full(t):
        raise NotFullError("cb_shape_prob needs a full binary tree")
    prob = Fraction(1)
    for v in _subtrees_bottom_up(t):
        if v.is_leaf:
            continue
        m, i = v.leaves, v.left.leaves  # type: ignore[union-attr]
        prob *= (Fraction(1, i) + Fraction(1, m - i)) / (2 * harmonic(m - 1))
    return prob


def cb_shape_distribution(m: int) -> ShapeDistribution:
    return ShapeDistribution(m, {t.code: cb_shape_prob(t) for t in full_shapes(m)})


def pi_t(t: Tree, p):
    """Probability that the trie on m = leafcount(t) strings subdivides to ``t``.

    m! q^LPL p^RPL prod_{k=2}^{m-1} (1 - q^k - p^k)^(-nu_k). Exact for
    rational ``p`` (Fraction or int-valued), float otherwise.
    """
    from .tree import metrics  # local: keep the import graph flat

    if isinstance(p, str):
        p = Fraction(p)
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    q = 1 - p
    mt = metrics(t)
    value = math.factorial(mt.leafcount) * q ** mt.lpl * p ** mt.rpl
    for k, nu in mt.nu.items():
        value /= (1 - (q ** k + p ** k)) ** nu
    return value


def patricia_shape_prob(t: Tree, p):
    """P(Patricia trie on m = leafcount(t) strings = t) = pi_t / (1 - p^m - q^m)."""
    if isinstance(p, str):
        p = Fraction(p)
    m = t.leaves
    if m == 1:
        return Fraction(1) if isinstance(p, Fraction) else 1.0
    return pi_t(t, p) / (1 - p ** m - (1 - p) ** m)


# ---------------------------------------------------------------------------
# compressed BST: generating functions and beta-hat
# ---------------------------------------------------------------------------

G_LEAF = ExpPoly({2: (Fraction(1, 2),), 0: (Fraction(-1, 2),)})


@lru_cache(maxsize=None)
def _g_code(code: str) -> ExpPoly:
    t = decode(code)
    if t.is_leaf:
        return G_LEAF
    g = kernel_integral(_g_code(t.left.code) * _g_code(t.right.code))  # type: ignore[union-attr]
    odd = [k for k in g.terms if k % 2]
    assert not odd, f"odd exponent {odd} in G for {code}"
    return g


def g_poly(t: Tree) -> ExpPoly:
    """Generating function of the BST shapes that compress to ``t``.

    G_leaf = (e^{2x} - 1)/2 and G_t = kernel_integral(G_left * G_right).
    Memoized by oriented shape code.
    """
    if not is_full(t):
        raise NotFullError("g_poly needs a full binary tree")
    return _g_code(t.code)


def h_poly(t: Tree) -> ExpPoly:
    """Generating function of the subdivisions of ``t`` whose root is not unary."""
    if t.is_leaf:
        return ExpPoly.x()
    prod = g_poly(t.left) * g_poly(t.right)  # type: ignore[arg-type]
    # integral_0^x of prod = e^{0}-kernel; reuse the exp antiderivative
    out = ExpPoly()
    for k, p in prod.terms.items():
        if k == 0:
            out = out + ExpPoly({0: _pantideriv(p)})
        else:
            a = _exp_antiderivative(p, Fraction(k))
            out = out + ExpPoly({k: a}) - ExpPoly.const(_peval(a, Fraction(0)))
    return out


_ONE_MINUS_X_SQ = ExpPoly({0: (1, -2, 1)})
_TWO_X_ONE_MINUS_X = ExpPoly({0: (0, 2, -2)})


@lru_cache(maxsize=None)
def _beta_hat_code(code: str) -> ExactExpValue:
    t = decode(code)
    if t.is_leaf:
        return ExactExpValue({0: Fraction(1, 3)})
    f = _ONE_MINUS_X_SQ * _g_code(t.left.code) * _g_code(t.right.code)  # type: ignore[union-attr]
    return f.integrate_01()


def beta_hat(t: Tree) -> ExactExpValue:
    """Limit of N_t(compressed BST_n)/n, exactly.

    1/3 for a leaf, else the integral over [0,1] of (1-x)^2 G_left G_right.
    """
    if not is_full(t):
        raise NotFullError("beta_hat needs a full binary tree")
    return _beta_hat_code(t.code)


def beta_hat_alt(t: Tree) -> ExactExpValue:
    """Same constant via the integral over [0,1] of 2x(1-x) G_t (non-leaf t)."""
    if t.is_leaf:
        raise ValueError("the alternative formula needs a tree with at least two leaves")
    return (_TWO_X_ONE_MINUS_X * g_poly(t)).integrate_01()


# ---------------------------------------------------------------------------
# extended BST, critical beta-splitting and uniform constants
# ---------------------------------------------------------------------------

def ebst_beta(t: Tree) -> Fraction:
    """Limit of N_t(extended BST_n)/n: 2/((k+1)(k+2)) P(BST_k = t_int), k internal nodes.

    A single leaf gives 1 (every extended BST has n+1 leaves).
    """
    if not is_full(t):
        raise NotFullError("ebst_beta needs a full binary tree")
    if t.is_leaf:
        return Fraction(1)
    k = t.internal
    return Fraction(2, (k + 1) * (k + 2)) * bst_shape_prob(delete_leaves(t))


def ebst_limit(t: Tree) -> Fraction:
    """Limiting fringe probability for the extended BST (1/2 for a leaf)."""
    return ebst_beta(t) / 2


@dataclass(frozen=True)
class InvPiSquared:
    """The real number ``coeff / pi^2`` with rational ``coeff``."""
    coeff: Fraction

    def __mul__(self, s: Number) -> InvPiSquared:
        return InvPiSquared(self.coeff * s)

    __rmul__ = __mul__

    def __float__(self) -> float:
        return float(self.coeff) / math.pi ** 2

    def __str__(self) -> str:
        c = self.coeff
        num = "" if c.numerator == 1 else str(c.numerator)
        den = "pi^2" if c.denominator == 1 else f"({c.denominator}pi^2)"
        return f"{num or '1'}/{den}"


@dataclass(frozen=True)
class CBLimit:
    """Critical beta-splitting constants for one shape.

    ``r = h_{m-1} / (m(m-1)) P(CB_m = t)``; the fringe probability limit is
    ``3r/pi^2`` and the leaf-based limit is ``6 m r / pi^2``.
    """
    r: Fraction
    m: int

    @property
    def fringe(self) -> InvPiSquared:
        return InvPiSquared(3 * self.r)

    @property
    def qsin(self) -> InvPiSquared:
        return InvPiSquared(6 * self.m * self.r)

    @property
    def count_per_leaf(self) -> InvPiSquared:
        """Limit of N_t(CB_n)/n."""
        return InvPiSquared(6 * self.r)


def cb_limit(t: Tree) -> CBLimit:
    m = t.leaves
    if m < 2:
        raise ValueError("cb_limit needs a tree with at least two leaves")
    r = harmonic(m - 1) / (m * (m - 1)) * cb_shape_prob(t)
    return CBLimit(r, m)


def uniform_limit(t: Tree) -> Fraction:
    """2^{-|t|} = 2^{1-2m}."""
    if not is_full(t):
        raise NotFullError("uniform_limit needs a full binary tree")
    return Fraction(1, 2 ** (2 * t.leaves - 1))


def uniform_qsin(t: Tree) -> Fraction:
    """m 2^{2-2m}."""
    return t.leaves * uniform_limit(t) * 2


def uniform_variance(t: Tree | int) -> Fraction:
    """Asymptotic Var N_t(U_n)/n = 2^{1-2m} - (2m-1) 2^{3-4m}, m >= 2."""
    m = t if isinstance(t, int) else t.leaves
    if m < 2:
        raise ValueError("the variance formula needs m >= 2")
    return Fraction(1, 2 ** (2 * m - 1)) - Fraction(2 * m - 1, 2 ** (4 * m - 3))
