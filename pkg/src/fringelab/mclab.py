"""
Monte Carlo experiments: replicate sampling, census aggregation, moment
statistics, comparisons with the limiting constants, normality proxies,
oscillation scans and exact small-n oracles.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import asymptotics, exact
from .samplers import ModelSpec, replicate_source, sample
from .tree import (
    Tree, census, cladogram_code, compress, decode, extend, full_shapes, is_full, parse_shape,
)

__all__ = [
    "ExperimentPlan", "Moments", "CensusStats", "CltRow", "Prediction", "ReportRow", "ComparisonReport",
    "run", "moments", "predict", "compare", "clt_diagnostic", "oscillation_scan",
    "oracle_bst_expectation", "oracle_uniform_expectation", "brute_uniform_expectation",
    "uniform_size_class_expectation", "catalan", "geometric_grid", "OscillationScan",
    "Z_LIMIT", "VAR_BAND", "SKEW_LIMIT", "KURT_LIMIT", "CSV_COLUMNS",
]

Z_LIMIT = 4.0
VAR_BAND = (0.8, 1.25)
SKEW_LIMIT = 0.3
KURT_LIMIT = 0.6
CLT_MIN_REPS = 200
CSV_COLUMNS = ("model", "n", "shape_code", "stat", "value", "predicted", "z")


# ---------------------------------------------------------------------------
# plans and raw results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentPlan:
    spec: ModelSpec
    n_values: tuple[int, ...]
    reps: int = 500
    K: int = 6
    master_seed: int = 0
    shapes: Optional[tuple[str, ...]] = None
    cladogram: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if not self.n_values:
            raise ValueError("n_values must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.shapes is not None:
            codes = tuple(_as_code(s) for s in self.shapes)
            too_big = [c for c in codes if c.count("0") > self.K]
            if too_big:
                raise ValueError(f"shapes {too_big} exceed the census cutoff K={self.K}")
            if self.cladogram:
                codes = tuple(dict.fromkeys(cladogram_code(c) for c in codes))
            object.__setattr__(self, "shapes", codes)


def _as_code(s: str | Tree) -> str:
    if isinstance(s, Tree):
        return s.code
    s = s.strip()
    if s and set(s) <= set("01LR"):
        return decode(s).code
    return parse_shape(s).code


def _work_unit(args) -> tuple[int, int, int, int, dict[str, int]]:
    spec, n_idx, n, rep, master_seed, K, cladogram = args
    rng = replicate_source(master_seed, rep, stream=n_idx)
    T = sample(spec.with_n(n), rng)
    counts = census(T, K).counts
    if cladogram:
        merged: dict[str, int] = {}
        for c, v in counts.items():
            key = cladogram_code(c)
            merged[key] = merged.get(key, 0) + v
        counts = merged
    return n_idx, rep, T.size, T.leaves, counts


@dataclass(frozen=True)
class Moments:
    mean: float
    var: float
    skew: float
    exkurt: float
    reps: int

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    @property
    def se(self) -> float:
        return self.sd / math.sqrt(self.reps)


def moments(x: np.ndarray) -> Moments:
    """Two-pass sample moments; var uses ddof=1, skew/kurtosis are plug-in ratios."""
    x = np.asarray(x, dtype=float)
    r = len(x)
    mean = math.fsum(x) / r
    d = x - mean
    m2 = math.fsum(d * d) / r
    var = m2 * r / (r - 1) if r > 1 else math.nan
    if m2 > 0:
        skew = (math.fsum(d ** 3) / r) / m2 ** 1.5
        exkurt = (math.fsum(d ** 4) / r) / m2 ** 2 - 3.0
    else:
        skew = exkurt = math.nan
    return Moments(mean, var, skew, exkurt, r)


@dataclass
class CensusStats:
    """Per-replicate integer data for every size in the plan.

    ``counts[n][code]`` is an array over replicates; ``sizes[n]`` and
    ``leafcounts[n]`` hold |T| and the leaf count of each replicate tree.
    """
    plan: ExperimentPlan
    counts: dict[int, dict[str, np.ndarray]] = field(default_factory=dict)
    sizes: dict[int, np.ndarray] = field(default_factory=dict)
    leafcounts: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def reps(self) -> int:
        return self.plan.reps

    def count(self, n: int, shape: str | Tree) -> np.ndarray:
        code = _as_code(shape)
        if self.plan.cladogram:
            code = cladogram_code(code)
        if code.count("0") > self.plan.K:
            raise ValueError(f"shape is above the census cutoff K={self.plan.K}")
        return self.counts[n].get(code, np.zeros(self.reps, dtype=np.int64))

    def fringe(self, n: int, shape: str | Tree) -> np.ndarray:
        return self.count(n, shape) / self.sizes[n]

    def moments(self, n: int, shape: str | Tree) -> Moments:
        return moments(self.count(n, shape))

    def shape_codes(self, n: int) -> list[str]:
        return sorted(self.counts[n], key=lambda c: (c.count("0"), c))

    def totals(self, n: int) -> np.ndarray:
        """Sum of all recorded counts per replicate."""
        return sum(self.counts[n].values(), np.zeros(self.reps, dtype=np.int64))


def run(plan: ExperimentPlan, jobs: int = 1) -> CensusStats:
    """Sample ``plan.reps`` trees per size and census their fringe subtrees.

    Replicate ``r`` at the ``i``-th size uses ``replicate_source(seed, r, i)``,
    so the result does not depend on ``jobs`` or on completion order.
    """
    units = [(plan.spec, i, n, r, plan.master_seed, plan.K, plan.cladogram)
             for i, n in enumerate(plan.n_values) for r in range(plan.reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_work_unit, units, chunksize=max(1, len(units) // (4 * jobs))))
    else:
        results = [_work_unit(u) for u in units]

    stats = CensusStats(plan)
    keep = set(plan.shapes) if plan.shapes is not None else None
    for i, n in enumerate(plan.n_values):
        stats.sizes[n] = np.zeros(plan.reps, dtype=np.int64)
        stats.leafcounts[n] = np.zeros(plan.reps, dtype=np.int64)
        stats.counts[n] = {}
    for n_idx, rep, size, leaves, counts in results:
        n = plan.n_values[n_idx]
        stats.sizes[n][rep] = size
        stats.leafcounts[n][rep] = leaves
        table = stats.counts[n]
        for code, v in counts.items():
            if keep is not None and code not in keep:
                continue
            arr = table.get(code)
            if arr is None:
                arr = table[code] = np.zeros(plan.reps, dtype=np.int64)
            arr[rep] += v
    if keep is not None:
        for n in plan.n_values:
            for code in keep:
                stats.counts[n].setdefault(code, np.zeros(plan.reps, dtype=np.int64))
    return stats


# ---------------------------------------------------------------------------
# predictions and comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Prediction:
    """Limit predictions for one (model, n, shape).

    ``var_per_n`` is the limit of Var N_t divided by ``n`` (``var_scale="n"``)
    or by the tree size (``"size"``); None where no formula is known.
    """
    fringe: float
    var_per_n: Optional[float] = None
    var_scale: str = "n"


def predict(spec: ModelSpec, shape: str | Tree, n: int) -> Prediction:
    t = decode(_as_code(shape))
    model = spec.model
    if model in ("trie", "bst", "beta_split") and (model != "beta_split" or spec.beta != -1.0):
        raise ValueError(f"no limit formula for model {model}")
    name = {"uniform_full": "uniform", "beta_split": "cb"}.get(model, model)
    if name == "patricia":
        src = asymptotics.SourceParams.make(spec.p)
        fr = asymptotics.limit_fringe("patricia", t, src)
        x = math.log(n)
        var = asymptotics.patricia_var_const(t, src)(x) if t.leaves >= 2 else None
        return Prediction(fr(x), var, "n")
    fr = asymptotics.limit_fringe(name, t)
    if name == "uniform" and t.leaves >= 2:
        # the limiting variance is per node of the tree, |T| = 2n - 1
        return Prediction(float(fr), float(exact.uniform_variance(t)), "size")
    return Prediction(float(fr))


@dataclass(frozen=True)
class ReportRow:
    model: str
    n: int
    shape_code: str
    stat: str
    value: float
    predicted: Optional[float] = None
    z: Optional[float] = None
    verdict: Optional[bool] = None

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


@dataclass
class ComparisonReport:
    rows: list[ReportRow]

    @property
    def passed(self) -> bool:
        return all(r.verdict is not False for r in self.rows)

    def failures(self) -> list[ReportRow]:
        return [r for r in self.rows if r.verdict is False]

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)

    def to_json(self) -> str:
        return json.dumps([r.as_dict() for r in self.rows], indent=2)

    def find(self, shape: str | Tree, stat: str, n: Optional[int] = None) -> ReportRow:
        code = _as_code(shape) if shape != "*" else shape
        for r in self.rows:
            if r.shape_code == code and r.stat == stat and (n is None or r.n == n):
                return r
        raise KeyError((code, stat, n))


def rows_to_csv(rows: Iterable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        d = r if isinstance(r, dict) else r.as_dict()
        w.writerow(["" if d.get(c) is None else d[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def _var_scale(pred: Prediction, n: int, mean_size: float) -> float:
    return mean_size if pred.var_scale == "size" else float(n)


def compare(stats: CensusStats, shapes: Optional[Sequence[str | Tree]] = None,
            predictions: Optional[dict] = None) -> ComparisonReport:
    """Empirical fringe probabilities and variances against limit predictions.

    Mean verdict: |z| <= 4 with SE = sample sd / sqrt(reps). Variance
    verdict: ratio in [0.8, 1.25], only where a variance formula exists.
    BST-based models also get leaf-count and size rows.
    """
    spec = stats.plan.spec
    rows: list[ReportRow] = []
    codes = [_as_code(s) for s in shapes] if shapes is not None else list(stats.plan.shapes or ())
    for n in stats.plan.n_values:
        mean_size = float(np.mean(stats.sizes[n]))
        for code in codes:
            key = (n, code)
            pred = predictions[key] if predictions and key in predictions else predict(spec, code, n)
            fr = moments(stats.fringe(n, code))
            z = (fr.mean - pred.fringe) / fr.se if fr.se > 0 else (0.0 if fr.mean == pred.fringe else math.inf)
            rows.append(ReportRow(spec.model, n, code, "fringe_prob", fr.mean, pred.fringe, z,
                                  abs(z) <= Z_LIMIT))
            cm = stats.moments(n, code)
            scale = _var_scale(pred, n, mean_size)
            value = cm.var / scale
            if pred.var_per_n is not None:
                ratio = value / pred.var_per_n
                rows.append(ReportRow(spec.model, n, code, "var_per_n", value, pred.var_per_n, None,
                                      VAR_BAND[0] <= ratio <= VAR_BAND[1]))
            else:
                rows.append(ReportRow(spec.model, n, code, "var_per_n", value))
        rows.extend(_bst_rows(stats, n))
    return ComparisonReport(rows)


def _bst_rows(stats: CensusStats, n: int) -> list[ReportRow]:
    model = stats.plan.spec.model
    out: list[ReportRow] = []
    if model in ("bst", "cbst"):
        lm = moments(stats.leafcounts[n] / n)
        z = (lm.mean - 1 / 3) / lm.se if lm.se > 0 else math.inf
        out.append(ReportRow(model, n, "*", "leafcount_per_n", lm.mean, 1 / 3, z, abs(z) <= Z_LIMIT))
        v = moments(stats.leafcounts[n]).var / n
        out.append(ReportRow(model, n, "*", "leafcount_var_per_n", v, 2 / 45, None,
                             VAR_BAND[0] <= v / (2 / 45) <= VAR_BAND[1]))
    if model == "cbst":
        v = moments(stats.sizes[n]).var / n
        out.append(ReportRow(model, n, "*", "size_var_per_n", v, 8 / 45, None,
                             VAR_BAND[0] <= v / (8 / 45) <= VAR_BAND[1]))
    return out


@dataclass(frozen=True)
class CltRow:
    model: str
    n: int
    shape_code: str
    skew: float
    exkurt: float
    verdict: Optional[bool]

    def report_rows(self) -> list[ReportRow]:
        return [ReportRow(self.model, self.n, self.shape_code, "skew", self.skew, 0.0, None, self.verdict),
                ReportRow(self.model, self.n, self.shape_code, "exkurt", self.exkurt, 0.0, None, self.verdict)]


def clt_diagnostic(stats: CensusStats, shape: str | Tree, n: Optional[int] = None) -> CltRow:
    """Moment proxy for asymptotic normality of N_t across replicates.

    Passes when |skew| <= 0.3 and |excess kurtosis| <= 0.6. Critical
    beta-splitting rows carry no verdict since no CLT is known there.
    """
    n = stats.plan.n_values[-1] if n is None else n
    if stats.reps < CLT_MIN_REPS:
        raise ValueError(f"CLT diagnostic needs at least {CLT_MIN_REPS} replicates, got {stats.reps}")
    x = stats.count(n, shape)
    if len(np.unique(x)) < 5:
        raise ValueError("counts are (nearly) constant; a normality proxy is meaningless here")
    mo = moments(x)
    verdict: Optional[bool] = abs(mo.skew) <= SKEW_LIMIT and abs(mo.exkurt) <= KURT_LIMIT
    if stats.plan.spec.model == "beta_split":
        verdict = None
    return CltRow(stats.plan.spec.model, n, _as_code(shape), mo.skew, mo.exkurt, verdict)


# ---------------------------------------------------------------------------
# oscillations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillationPoint:
    n: int
    phase: float
    empirical: float
    se: float
    predicted: float
    constant: float

    @property
    def predicted_deviation(self) -> float:
        return self.predicted - self.constant


@dataclass(frozen=True)
class OscillationScan:
    shape_code: str
    p: float
    period: float
    relative_amplitude: float
    points: list[OscillationPoint]

    @property
    def amplitude_to_se(self) -> float:
        """Predicted absolute amplitude over the median standard error."""
        if not self.points:
            return math.nan
        se = float(np.median([pt.se for pt in self.points]))
        return self.relative_amplitude * self.points[0].constant / se if se > 0 else math.inf

    def rows(self) -> list[dict]:
        return [{"model": "patricia", "n": pt.n, "shape_code": self.shape_code, "stat": "count_per_n",
                 "value": pt.empirical, "predicted": pt.predicted,
                 "z": (pt.empirical - pt.predicted) / pt.se if pt.se > 0 else None,
                 "phase": pt.phase} for pt in self.points]


def geometric_grid(lo_exp: float, hi_exp: float, per_period: int = 4, base: float = 2.0) -> list[int]:
    """Sizes base**x for x from lo_exp to hi_exp in steps of 1/per_period."""
    steps = int(round((hi_exp - lo_exp) * per_period))
    return sorted({int(round(base ** (lo_exp + i / per_period))) for i in range(steps + 1)})


def _phase(x: float, d: float) -> float:
    """Position of x inside its period, in [0, 1); rounding noise at multiples of d maps to 0."""
    ph = (x / d) % 1.0
    return 0.0 if min(ph, 1.0 - ph) < 1e-9 else ph


def oscillation_scan(t: Tree | str, p: float | Fraction | str = Fraction(1, 2),
                     n_grid: Sequence[int] = (), reps: int = 50, master_seed: int = 0,
                     jobs: int = 1, k_max: int = asymptotics.DEFAULT_K_MAX) -> OscillationScan:
    """Phase-folded E N_t / n for Patricia tries against psi_E(log n)/H.

    For small shapes the predicted oscillation is far below Monte Carlo noise;
    ``amplitude_to_se`` reports that ratio rather than claiming a detection.
    """
    tree = t if isinstance(t, Tree) else decode(_as_code(t))
    src = asymptotics.SourceParams.make(p)
    if not src.periodicity.periodic:
        raise ValueError("oscillation scans need a periodic source")
    grid = list(n_grid) or geometric_grid(10, 13)
    mean_fn = asymptotics.patricia_mean_const(tree, src, k_max)
    plan = ExperimentPlan(ModelSpec("patricia", grid[0], p=p), tuple(grid), reps,
                          K=tree.leaves, master_seed=master_seed, shapes=(tree.code,))
    stats = run(plan, jobs)
    d = src.periodicity.d
    pts = []
    for n in grid:
        mo = moments(stats.count(n, tree) / n)
        x = math.log(n)
        pts.append(OscillationPoint(n, _phase(x, d), mo.mean, mo.se, mean_fn(x), mean_fn.constant))
    c1 = abs(mean_fn.coefficient(1))
    return OscillationScan(tree.code, src.p, d, 2 * c1 / mean_fn.constant, pts)


# ---------------------------------------------------------------------------
# exact small-n oracles
# ---------------------------------------------------------------------------

def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def _occurrences(T: Tree, t: Tree) -> int:
    return census(T, t.leaves).count(t)


def oracle_bst_expectation(t: Tree | str, n: int, transform: str = "compress") -> Fraction:
    """Exact E N_t(transform(BST_n)) by summing over all BST shapes of size n.

    ``transform`` is "compress", "extend" or "none".
    """
    if n > 10:
        raise ValueError("the BST oracle enumerates all shapes and is limited to n <= 10")
    tree = t if isinstance(t, Tree) else decode(_as_code(t))
    fn = {"compress": compress, "extend": extend, "none": lambda x: x}[transform]
    total = Fraction(0)
    for code, prob in exact.bst_shape_distribution(n).items():
        total += prob * _occurrences(fn(decode(code)), tree)
    return total


def oracle_uniform_expectation(t: Tree | str, n: int) -> Fraction:
    """Exact E N_t(U_n) for the uniform full binary tree with n leaves.

    occ(n) = [n = m] + sum_i occ(i) C(n-i-1) + C(i-1) occ(n-i) counts copies
    of t over all Catalan(n-1) trees.
    """
    if n > 14:
        raise ValueError("the uniform oracle is limited to n <= 14")
    tree = t if isinstance(t, Tree) else decode(_as_code(t))
    if not is_full(tree):
        raise ValueError("uniform full trees only contain full fringe trees")
    m = tree.leaves
    occ = [0] * (n + 1)
    for k in range(1, n + 1):
        total = 1 if k == m else 0
        for i in range(1, k):
            total += occ[i] * catalan(k - i - 1) + catalan(i - 1) * occ[k - i]
        occ[k] = total
    return Fraction(occ[n], catalan(n - 1))


def uniform_size_class_expectation(m: int, n: int) -> Fraction:
    """E of the number of fringe subtrees with exactly m leaves in U_n (any shape)."""
    occ = [0] * (n + 1)
    for k in range(1, n + 1):
        total = catalan(m - 1) if k == m else 0
        for i in range(1, k):
            total += occ[i] * catalan(k - i - 1) + catalan(i - 1) * occ[k - i]
        occ[k] = total
    return Fraction(occ[n], catalan(n - 1))


def brute_uniform_expectation(t: Tree, n: int) -> Fraction:
    """Same as the DP oracle by explicit enumeration; small n only."""
    shapes = full_shapes(n)
    return Fraction(sum(_occurrences(T, t) for T in shapes), len(shapes))
