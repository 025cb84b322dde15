"""
Patricia-trie constants (Mellin transforms, periodic fluctuation functions)
and a single entry point for the limiting fringe constants of every model.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Mapping, Optional, Union

import numpy as np
from scipy.special import loggamma

from . import exact
from .tree import LEAF, NotFullError, Tree, is_full, metrics

__all__ = [
    "complex_gamma", "log_complex_gamma", "Periodicity", "SourceParams", "detect_period",
    "MellinKernel", "mellin_E", "mellin_C", "mellin_V", "mellin_V_direct",
    "PeriodicConstant", "psi", "patricia_mean_const", "patricia_var_const",
    "oscillation_ratio", "limit_fringe", "limit_qsin", "LIMIT_MODELS",
    "DEFAULT_K_MAX", "DEFAULT_MAX_DENOMINATOR", "SeriesDivergence",
]

DEFAULT_K_MAX = 8
DEFAULT_MAX_DENOMINATOR = 1000
PERIOD_TOL = 1e-12
SERIES_TERM_CAP = 10_000

Prob = Union[float, Fraction, str]


class SeriesDivergence(ArithmeticError):
    """The variance k-series did not settle within the term cap."""


# ---------------------------------------------------------------------------
# gamma on the complex plane
# ---------------------------------------------------------------------------

def _check_pole(s: complex) -> None:
    if s.imag == 0 and s.real <= 0 and s.real == math.floor(s.real):
        raise ValueError(f"gamma has a pole at {s.real:g}")


def log_complex_gamma(s: complex) -> complex:
    """Principal log-gamma; safe where Gamma itself would overflow."""
    s = complex(s)
    _check_pole(s)
    return complex(loggamma(s))


def complex_gamma(s: complex) -> complex:
    s = complex(s)
    _check_pole(s)
    return cmath.exp(complex(loggamma(s)))


# ---------------------------------------------------------------------------
# source parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Periodicity:
    """``periodic`` with -log p = a d and -log q = b d, or aperiodic (a = b = 0)."""
    a: int = 0
    b: int = 0
    d: float = math.nan

    @property
    def periodic(self) -> bool:
        return self.a > 0

    def __str__(self) -> str:
        return f"periodic(a={self.a}, b={self.b}, d={self.d:.12g})" if self.periodic else "aperiodic"


def _as_prob(p: Prob) -> float:
    if isinstance(p, str):
        p = Fraction(p.strip())
    value = float(p)
    if not 0 < value < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return value


def detect_period(p: Prob, max_denominator: int = DEFAULT_MAX_DENOMINATOR) -> Periodicity:
    """Decide numerically whether log p / log q is a rational a/b with a, b <= cap.

    Exact arithmetic cannot be recovered from floats, so the answer is a
    best rational approximation accepted within 1e-12.
    """
    pf = _as_prob(p)
    lp, lq = -math.log(pf), -math.log1p(-pf)
    r = lp / lq
    cap = max_denominator
    approx = Fraction(r).limit_denominator(cap)
    if approx.numerator > max_denominator:
        cap = max(1, int(max_denominator / r))
        approx = Fraction(r).limit_denominator(cap)
    a, b = approx.numerator, approx.denominator
    if a == 0 or a > max_denominator or abs(r - a / b) > PERIOD_TOL * max(1.0, r):
        return Periodicity()
    d = lp / a
    return Periodicity(a, b, d)


@dataclass(frozen=True)
class SourceParams:
    p: float
    periodicity: Periodicity

    @classmethod
    def make(cls, p: Prob, max_denominator: int = DEFAULT_MAX_DENOMINATOR,
             period: Optional[tuple[int, int]] = None) -> SourceParams:
        pf = _as_prob(p)
        if period is None:
            per = detect_period(pf, max_denominator)
        else:
            a, b = period
            if a <= 0 or b <= 0 or math.gcd(a, b) != 1:
                raise ValueError("explicit period needs coprime positive integers a, b")
            d = -math.log(pf) / a
            if abs(-math.log1p(-pf) / b - d) > 1e-9 * d:
                raise ValueError(f"p={pf} is not periodic with a={a}, b={b}")
            per = Periodicity(a, b, d)
        return cls(pf, per)

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def H(self) -> float:
        p, q = self.p, self.q
        return -p * math.log(p) - q * math.log(q)


# ---------------------------------------------------------------------------
# Mellin transforms
# ---------------------------------------------------------------------------

def _log_pi_t(t: Tree, p: float) -> float:
    mt = metrics(t)
    q = 1.0 - p
    value = math.lgamma(mt.leafcount + 1) + mt.lpl * math.log(q) + mt.rpl * math.log(p)
    for k, nu in mt.nu.items():
        value -= nu * math.log1p(-(q ** k + p ** k))
    return value


@dataclass(frozen=True)
class MellinKernel:
    """Mellin transforms of the Poisson-model functions for one shape and source."""
    t: Tree
    p: float
    m: int = field(init=False)
    log_pi: float = field(init=False)

    def __post_init__(self) -> None:
        if not is_full(self.t):
            raise NotFullError("Patricia constants need a full binary tree")
        if self.t.leaves < 2:
            raise ValueError("Patricia constants need at least two leaves")
        object.__setattr__(self, "m", self.t.leaves)
        object.__setattr__(self, "log_pi", _log_pi_t(self.t, self.p))

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def pi_t(self) -> float:
        return math.exp(self.log_pi)

    def E(self, s: complex) -> complex:
        return mellin_E(self, s)

    def C(self, s: complex) -> complex:
        return mellin_C(self, s)

    def V(self, s: complex, tol: float = 1e-14) -> complex:
        return mellin_V(self, s, tol)


def mellin_E(kernel: MellinKernel, s: complex) -> complex:
    """pi_t Gamma(m+s) / m!."""
    m = kernel.m
    return cmath.exp(kernel.log_pi + log_complex_gamma(m + s) - math.lgamma(m + 1))


def mellin_C(kernel: MellinKernel, s: complex) -> complex:
    return -s * mellin_E(kernel, s)


def _check_strip(kernel: MellinKernel, s: complex) -> None:
    if complex(s).real <= -kernel.m:
        raise ValueError(f"Mellin transform needs Re s > -m = {-kernel.m}")


def _fsum_complex(terms: list[complex]) -> complex:
    return complex(math.fsum(z.real for z in terms), math.fsum(z.imag for z in terms))


def mellin_V(kernel: MellinKernel, s: complex, tol: float = 1e-14) -> complex:
    """Variance Mellin transform via the alternating k-series.

    Terms are Gamma(2m+s+k)/k! (-1)^k g_{m+k} with g_j = (p^j+q^j)/(1-p^j-q^j);
    summation stops once a term falls below tol * (1 + |partial sum|) after the
    peak, and uses exact-rounding fsum on real and imaginary parts.
    """
    s = complex(s)
    _check_strip(kernel, s)
    m, p, q = kernel.m, kernel.p, kernel.q
    log_pi, log_mfact = kernel.log_pi, math.lgamma(m + 1)
    first = cmath.exp(log_pi + log_complex_gamma(m + s) - log_mfact)
    lg2 = log_complex_gamma(2 * m + s)
    second = cmath.exp(2 * log_pi - 2 * log_mfact - (2 * m + s) * math.log(2) + lg2)

    terms: list[complex] = []
    partial = 0j
    prev_abs = math.inf
    for k in range(SERIES_TERM_CAP):
        j = m + k
        g = p ** j + q ** j
        if g == 0.0:
            break
        geo = g / (1.0 - g)
        log_mag = log_complex_gamma(2 * m + s + k) - math.lgamma(k + 1)
        term = (-1) ** k * cmath.exp(log_mag) * geo
        terms.append(term)
        partial += term
        mag = abs(term)
        if mag < prev_abs and mag <= tol * (1.0 + abs(partial)):
            break
        prev_abs = mag
    else:
        raise SeriesDivergence(f"variance series did not converge in {SERIES_TERM_CAP} terms")
    series = _fsum_complex(terms)
    third = 2.0 * cmath.exp(2 * log_pi - 2 * log_mfact) * series
    return first - second - third


def mellin_V_direct(kernel: MellinKernel, s: complex, tol: float = 1e-16) -> complex:
    """Same transform summed over string levels instead of the k-series.

    Uses sum over levels l >= 1 and j ones of C(l, j) P^m (1+P)^(-2m-s) with
    P = p^j q^(l-j); the level sum decays like (p^m + q^m)^l.
    """
    s = complex(s)
    _check_strip(kernel, s)
    m, p, q = kernel.m, kernel.p, kernel.q
    log_pi, log_mfact = kernel.log_pi, math.lgamma(m + 1)
    first = cmath.exp(log_pi + log_complex_gamma(m + s) - log_mfact)
    lg2 = log_complex_gamma(2 * m + s)
    second = cmath.exp(2 * log_pi - 2 * log_mfact - (2 * m + s) * math.log(2) + lg2)

    lp, lq = math.log(p), math.log(q)
    level_sums: list[complex] = []
    ell = 0
    while True:
        ell += 1
        j = np.arange(ell + 1)
        logP = j * lp + (ell - j) * lq
        logC = (math.lgamma(ell + 1) - np.array([math.lgamma(x + 1) for x in j])
                - np.array([math.lgamma(ell - x + 1) for x in j]))
        vals = np.exp(logC + m * logP - (2 * m + s) * np.log1p(np.exp(logP)))
        level = complex(math.fsum(vals.real), math.fsum(vals.imag))
        level_sums.append(level)
        bound = (p ** m + q ** m) ** ell
        if bound < tol * max(1e-300, abs(sum(level_sums))) or ell > SERIES_TERM_CAP:
            break
    series = _fsum_complex(level_sums) * cmath.exp(lg2)
    third = 2.0 * cmath.exp(2 * log_pi - 2 * log_mfact) * series
    return first - second - third


# ---------------------------------------------------------------------------
# periodic functions as truncated Fourier series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicConstant:
    """psi(x) = constant + sum_{k != 0} c_k exp(2 pi i k x / d).

    Aperiodic sources carry no Fourier terms. ``tail_bound`` bounds the
    relative size of the first omitted coefficient.
    """
    constant: float
    fourier: Mapping[int, complex] = field(default_factory=dict)
    period: Optional[float] = None
    k_max: int = 0
    tail_bound: float = 0.0

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def coefficient(self, k: int) -> complex:
        if k == 0:
            return complex(self.constant)
        return self.fourier.get(k, 0j)

    def __call__(self, x):
        """Evaluate at x (float or array); the imaginary part cancels by symmetry."""
        xs = np.asarray(x, dtype=float)
        out = np.full(xs.shape, self.constant, dtype=float)
        if self.periodic:
            w = 2.0 * math.pi / self.period
            for k, c in self.fourier.items():
                if k > 0:
                    out += 2.0 * (c * np.exp(1j * k * w * xs)).real
        return float(out) if np.ndim(x) == 0 else out

    def evaluate_complex(self, x: float) -> complex:
        total = complex(self.constant)
        if self.periodic:
            w = 2.0 * math.pi / self.period
            for k, c in self.fourier.items():
                total += c * cmath.exp(1j * k * w * x)
        return total

    def scale(self, c: float) -> PeriodicConstant:
        return PeriodicConstant(self.constant * c, {k: v * c for k, v in self.fourier.items()},
                                self.period, self.k_max, self.tail_bound)

    def __mul__(self, c: float) -> PeriodicConstant:
        if isinstance(c, PeriodicConstant):
            return self.product(c)
        return self.scale(float(c))

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> PeriodicConstant:
        return self.scale(1.0 / float(c))

    def _combine(self, other: PeriodicConstant, sign: float) -> PeriodicConstant:
        if self.periodic and other.periodic and abs(self.period - other.period) > 1e-12 * self.period:
            raise ValueError("cannot combine periodic functions with different periods")
        fourier = dict(self.fourier)
        for k, v in other.fourier.items():
            fourier[k] = fourier.get(k, 0j) + sign * v
        return PeriodicConstant(self.constant + sign * other.constant, fourier,
                                self.period if self.periodic else other.period,
                                max(self.k_max, other.k_max), max(self.tail_bound, other.tail_bound))

    def __add__(self, other: PeriodicConstant) -> PeriodicConstant:
        return self._combine(other, 1.0)

    def __sub__(self, other: PeriodicConstant) -> PeriodicConstant:
        return self._combine(other, -1.0)

    def product(self, other: PeriodicConstant) -> PeriodicConstant:
        """Pointwise product, by convolution of the coefficient sequences."""
        a = {0: complex(self.constant), **self.fourier}
        b = {0: complex(other.constant), **other.fourier}
        conv: dict[int, complex] = {}
        for i, x in a.items():
            for j, y in b.items():
                conv[i + j] = conv.get(i + j, 0j) + x * y
        constant = conv.pop(0).real
        period = self.period if self.periodic else other.period
        return PeriodicConstant(constant, {k: v for k, v in conv.items() if v != 0},
                                period, self.k_max + other.k_max,
                                max(self.tail_bound, other.tail_bound))

    def amplitude(self) -> float:
        """Upper bound on |psi(x) - constant|: sum of |c_k| over k != 0."""
        return math.fsum(abs(c) for c in self.fourier.values())

    def to_record(self) -> dict:
        return {
            "constant": self.constant,
            "fourier": [{"k": k, "re": c.real, "im": c.imag} for k, c in sorted(self.fourier.items())],
            "period": self.period,
        }


Which = Literal["E", "V", "C"]


def psi(kernel: MellinKernel, which: Which, k_max: int = DEFAULT_K_MAX,
        source: Optional[SourceParams] = None, tol: float = 1e-14,
        v_method: Literal["levels", "series"] = "levels") -> PeriodicConstant:
    """Fluctuation function psi_X built from M_X(-1 - 2 pi i k / d).

    For X = V the default sums over string levels; the alternating k-series
    (``v_method="series"``) loses up to ~1e-8 relative accuracy to
    cancellation when p is far from 1/2.
    """
    if v_method not in ("levels", "series"):
        raise ValueError(f"unknown v_method {v_method!r}")
    v_fn = mellin_V_direct if v_method == "levels" else (lambda ker, s: mellin_V(ker, s, tol))
    fn = {"E": mellin_E, "C": mellin_C, "V": v_fn}[which]
    src = source or SourceParams.make(kernel.p)
    constant = fn(kernel, -1.0).real
    per = src.periodicity
    if not per.periodic:
        return PeriodicConstant(constant)
    w = 2.0 * math.pi / per.d
    fourier: dict[int, complex] = {}
    for k in range(1, k_max + 1):
        c = complex(fn(kernel, complex(-1.0, -w * k)))
        fourier[k] = c
        fourier[-k] = c.conjugate()
    m = kernel.m
    tail = math.exp(log_complex_gamma(complex(m - 1, -w * (k_max + 1))).real - math.lgamma(m - 1))
    return PeriodicConstant(constant, fourier, per.d, k_max, tail)


def oscillation_ratio(m: int, d: float = math.log(2), k: int = 1) -> float:
    """|Gamma(m-1 - 2 pi i k/d)| / Gamma(m-1): relative size of the k-th coefficient."""
    if m < 2:
        raise ValueError("m must be at least 2")
    return math.exp(log_complex_gamma(complex(m - 1, -2 * math.pi * k / d)).real - math.lgamma(m - 1))


def _kernel(t: Tree, p: Prob) -> tuple[MellinKernel, SourceParams]:
    src = p if isinstance(p, SourceParams) else SourceParams.make(p)
    return MellinKernel(t, src.p), src


def patricia_mean_const(t: Tree, p: Prob | SourceParams, k_max: int = DEFAULT_K_MAX) -> PeriodicConstant:
    """x -> psi_E(x)/H, so that E N_t / n is close to this at x = log n."""
    ker, src = _kernel(t, p)
    return psi(ker, "E", k_max, src) / src.H


def patricia_var_const(t: Tree, p: Prob | SourceParams, k_max: int = DEFAULT_K_MAX,
                       v_method: Literal["levels", "series"] = "levels") -> PeriodicConstant:
    """x -> psi_V(x)/H - psi_C(x)^2/H^2, the limit of Var N_t / n."""
    ker, src = _kernel(t, p)
    pv = psi(ker, "V", k_max, src, v_method=v_method)
    pc = psi(ker, "C", k_max, src)
    return pv / src.H - pc.product(pc) / src.H ** 2


# ---------------------------------------------------------------------------
# model-uniform limits
# ---------------------------------------------------------------------------

LIMIT_MODELS = ("patricia", "ebst", "cbst", "cb", "uniform")
_ALIASES = {"beta_split": "cb", "beta": "cb", "uniform_full": "uniform"}


def _model_name(model: str) -> str:
    name = _ALIASES.get(model, model)
    if name not in LIMIT_MODELS:
        raise ValueError(f"no limit formula for model {model!r}; known: {', '.join(LIMIT_MODELS)}")
    return name


def limit_fringe(model: str, t: Tree, p: Prob | SourceParams | None = None,
                 k_max: int = DEFAULT_K_MAX):
    """Limiting probability that a uniformly random fringe tree has shape ``t``.

    Return types are exact where possible: Fraction (ebst, uniform),
    ExactExpValue (cbst), InvPiSquared (cb), PeriodicConstant (patricia).
    """
    name = _model_name(model)
    if not is_full(t):
        raise NotFullError("fringe limits are defined for full binary trees")
    if t.is_leaf:
        return Fraction(1, 2)
    if name == "patricia":
        if p is None:
            raise ValueError("patricia needs p")
        ker, src = _kernel(t, p)
        return psi(ker, "E", k_max, src) / (2.0 * src.H)
    if name == "ebst":
        return exact.ebst_limit(t)
    if name == "cbst":
        return exact.beta_hat(t) * Fraction(3, 2)
    if name == "cb":
        return exact.cb_limit(t).fringe
    return exact.uniform_limit(t)


def limit_qsin(model: str, t: Tree, p: Prob | SourceParams | None = None,
               k_max: int = DEFAULT_K_MAX):
    """Limit of q(T; t) = N_t(T) * leaves(t) / leaves(T)."""
    name = _model_name(model)
    if not is_full(t):
        raise NotFullError("fringe limits are defined for full binary trees")
    if t.is_leaf:
        return Fraction(1)
    m = t.leaves
    if name == "patricia":
        if p is None:
            raise ValueError("patricia needs p")
        ker, src = _kernel(t, p)
        return psi(ker, "E", k_max, src) * (m / src.H)
    if name == "ebst":
        return exact.ebst_beta(t) * m
    if name == "cbst":
        return exact.beta_hat(t) * (3 * m)
    if name == "cb":
        return exact.cb_limit(t).qsin
    return exact.uniform_qsin(t)
