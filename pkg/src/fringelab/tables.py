"""Summary tables of limiting fringe constants for the five tree models."""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

from . import asymptotics, exact
from .tree import NAMED, Tree

TABLE_SHAPES = ("t2", "t3", "t4a", "t4c")
TABLE_MODELS = ("patricia", "ebst", "cbst", "cb", "uniform")
TABLE_P = Fraction(1, 2)
MODEL_LABELS = {
    "patricia": "Patricia p=1/2 *",
    "ebst": "ext. BST",
    "cbst": "compr. BST",
    "cb": "crit. beta-split",
    "uniform": "uniform full",
}


def round4(x) -> str:
    """Four decimals, round-half-even on the exact decimal expansion of ``x``."""
    if isinstance(x, Fraction):
        d = Decimal(x.numerator) / Decimal(x.denominator)
    elif isinstance(x, exact.ExactExpValue):
        d = x.to_decimal(40)
    else:
        d = Decimal(repr(float(x)))
    return str(d.quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _value(v) -> float:
    if isinstance(v, asymptotics.PeriodicConstant):
        return v.constant
    return float(v)


def _exactish(v):
    """Best available representation for rounding."""
    if isinstance(v, asymptotics.PeriodicConstant):
        return v.constant
    if isinstance(v, exact.InvPiSquared):
        return float(v)
    return v


@dataclass(frozen=True)
class Table:
    title: str
    rows: dict[str, dict[str, object]]

    def numeric(self) -> dict[str, dict[str, float]]:
        return {m: {s: _value(v) for s, v in row.items()} for m, row in self.rows.items()}

    def formatted(self) -> dict[str, dict[str, str]]:
        return {m: {s: round4(_exactish(v)) for s, v in row.items()} for m, row in self.rows.items()}

    def render(self) -> str:
        width = max(len(lbl) for lbl in MODEL_LABELS.values())
        lines = [self.title, " " * width + "".join(f"{s:>10}" for s in TABLE_SHAPES)]
        fmt = self.formatted()
        for model in TABLE_MODELS:
            cells = "".join(f"{fmt[model][s]:>10}" for s in TABLE_SHAPES)
            lines.append(f"{MODEL_LABELS[model]:<{width}}{cells}")
        return "\n".join(lines)


def _build(kind: str) -> Table:
    fn = asymptotics.limit_fringe if kind == "fringe" else asymptotics.limit_qsin
    rows: dict[str, dict[str, object]] = {}
    for model in TABLE_MODELS:
        p = TABLE_P if model == "patricia" else None
        rows[model] = {s: fn(model, NAMED[s], p) for s in TABLE_SHAPES}
    title = ("limiting fringe probability P(T* = t)" if kind == "fringe"
             else "limiting q(T; t) = N_t leaves(t) / leaves(T)")
    return Table(title, rows)


def fringe_table() -> Table:
    return _build("fringe")


def qsin_table() -> Table:
    return _build("qsin")


def ratio_row(table: Table | None = None) -> dict[str, float]:
    """P(T* = t4c) / P(T* = t4a) per model."""
    table = table or fringe_table()
    num = table.numeric()
    return {m: num[m]["t4c"] / num[m]["t4a"] for m in TABLE_MODELS}


def exact_ratio(model: str) -> Fraction | None:
    """The ratio in closed form where it is rational."""
    t4a, t4c = NAMED["t4a"], NAMED["t4c"]
    if model == "patricia":
        return Fraction(exact.pi_t(t4c, TABLE_P)) / exact.pi_t(t4a, TABLE_P)
    if model == "ebst":
        return exact.ebst_limit(t4c) / exact.ebst_limit(t4a)
    if model == "cb":
        return exact.cb_limit(t4c).r / exact.cb_limit(t4a).r
    if model == "uniform":
        return exact.uniform_limit(t4c) / exact.uniform_limit(t4a)
    return None


def render_all() -> str:
    f, q = fringe_table(), qsin_table()
    ratios = ratio_row(f)
    ratio_line = "t4c/t4a ratio: " + ", ".join(
        f"{m} {str(exact_ratio(m)) if exact_ratio(m) is not None else f'{ratios[m]:.6f}'}"
        for m in TABLE_MODELS)
    note = "* constant term only; the periodic correction is below 1e-3 relative"
    return "\n\n".join([f.render(), q.render(), ratio_line, note]) + "\n"


def shape(name: str) -> Tree:
    return NAMED[name]
