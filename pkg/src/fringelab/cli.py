"""
Command-line interface.

Subcommands: sample, constants, tables, census, compare, oscillate.
Every option can also come from a ``key = value`` file given with
``--config``; command-line flags win. Exit codes: 0 ok, 1 a comparison
verdict failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import secrets
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import asymptotics, exact, mclab, tables
from .samplers import MODELS, ModelSpec, RandomSource, sample
from .tree import NAMED, Tree, decode, format_shape, parse_shape

log = logging.getLogger("fringelab")

EXIT_OK, EXIT_VERDICT, EXIT_USAGE = 0, 1, 2
MODEL_CHOICES = MODELS + ("cb", "beta", "uniform")
LIMIT_CHOICES = asymptotics.LIMIT_MODELS + ("beta_split", "uniform_full")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------

def parse_prob(text: str) -> Fraction | float:
    """'1/3' -> Fraction (exact paths), '0.3' -> float."""
    text = str(text).strip()
    try:
        value: Fraction | float = Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a probability: {text!r}")
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"probability must lie in (0, 1): {text!r}")
    return value


def parse_tree(text: str) -> Tree:
    text = str(text).strip()
    if text in NAMED:
        return NAMED[text]
    try:
        if text and set(text) <= set("01LR"):
            return decode(text)
        return parse_shape(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def parse_size(text: str) -> int:
    """Integer with optional power syntax, e.g. 10000, 1e4, 2^17."""
    text = str(text).strip()
    m = re.fullmatch(r"(\d+)\^(\d+)", text)
    try:
        if m:
            return int(m.group(1)) ** int(m.group(2))
        value = float(text) if re.search(r"[eE.]", text) else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a size: {text!r}")
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"size must be a positive integer: {text!r}")
    return int(value)


def parse_grid(text: str, per_period: int = 4) -> list[int]:
    """'2^10..2^20' (geometric, ``per_period`` points per doubling) or a comma list."""
    text = str(text).strip()
    m = re.fullmatch(r"(\d+)\^(\d+)\s*\.\.\s*(\d+)\^(\d+)", text)
    if m:
        base, lo, base2, hi = (int(g) for g in m.groups())
        if base != base2 or lo >= hi:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}")
        return mclab.geometric_grid(lo, hi, per_period, base)
    return [parse_size(x) for x in re.split(r"[,\s]+", text) if x]


def parse_period(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("period must be given as a,b")
    return a, b


def _fmt_exact(v) -> Optional[str]:
    if isinstance(v, (Fraction, exact.ExactExpValue, exact.InvPiSquared)):
        return str(v)
    return None


def _float(v) -> float:
    if isinstance(v, asymptotics.PeriodicConstant):
        return v.constant
    return float(v)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` pairs; '#' starts a comment; keys use - or _."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def split_list(value: str) -> list[str]:
    """Split on whitespace, ';' and commas outside parentheses."""
    items, depth, cur = [], 0, []
    for ch in value:
        depth += (ch == "(") - (ch == ")")
        if ch in " \t;" or (ch == "," and depth == 0):
            if cur:
                items.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        items.append("".join(cur))
    return items


def _apply_config(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for this command")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            flag = value.lower() in ("1", "true", "yes", "on")
            if value.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise UsageError(f"config key {key!r} expects a boolean")
            defaults[key] = flag if isinstance(action, argparse._StoreTrueAction) else not flag
        elif action.nargs in ("+", "*"):
            conv = action.type or str
            try:
                defaults[key] = [conv(v) for v in split_list(value)]
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key!r}: {exc}")
        else:
            defaults[key] = value
    parser.set_defaults(**defaults)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _model_opts(p: argparse.ArgumentParser, n_multi: bool = False, n_default=10_000) -> None:
    p.add_argument("--model", choices=MODEL_CHOICES, required=False, default=None)
    if n_multi:
        p.add_argument("--n", type=parse_size, nargs="+", default=[n_default], help="tree size(s)")
    else:
        p.add_argument("--n", type=parse_size, default=n_default, help="tree size")
    p.add_argument("--p", type=parse_prob, default=None, help="bit probability, e.g. 1/2 or 0.3")
    p.add_argument("--beta", type=float, default=None, help="beta-splitting parameter (default -1)")


def _mc_opts(p: argparse.ArgumentParser, reps: int) -> None:
    p.add_argument("--reps", type=int, default=reps)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (1 = deterministic single thread)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="write to a file instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fringelab", description="Random fringe trees of random binary trees.")
    parser.add_argument("--config", help="key = value file with defaults for the subcommand")
    parser.add_argument("-q", "--quiet", action="store_true", help="do not log the resolved configuration")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw one random tree")
    _model_opts(sp, n_default=10)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--format", choices=("shape", "code"), default="shape")

    cp = sub.add_parser("constants", help="limiting constants for one shape as JSON")
    cp.add_argument("--model", choices=LIMIT_CHOICES, default=None)
    cp.add_argument("--tree", type=parse_tree, default=None)
    cp.add_argument("--p", type=parse_prob, default=None)
    cp.add_argument("--fourier-terms", type=int, default=asymptotics.DEFAULT_K_MAX)
    cp.add_argument("--max-denominator", type=int, default=asymptotics.DEFAULT_MAX_DENOMINATOR)
    cp.add_argument("--period", type=parse_period, default=None, help="force periodic source with a,b")

    tp = sub.add_parser("tables", help="summary tables of limiting fringe constants")
    tp.add_argument("--format", choices=("text", "json", "csv"), default="text")

    ce = sub.add_parser("census", help="Monte Carlo fringe census")
    _model_opts(ce, n_multi=True)
    ce.add_argument("--max-leaves", type=int, default=6)
    ce.add_argument("--shapes", type=parse_tree, nargs="+", default=None)
    ce.add_argument("--cladogram", action="store_true", help="merge left/right orientations")
    _mc_opts(ce, reps=100)

    co = sub.add_parser("compare", help="Monte Carlo against limit constants")
    _model_opts(co, n_multi=True)
    co.add_argument("--tree", type=parse_tree, nargs="+", default=None)
    co.add_argument("--max-leaves", type=int, default=None)
    co.add_argument("--clt", action="store_true", help="add skewness/kurtosis rows")
    _mc_opts(co, reps=500)

    os_ = sub.add_parser("oscillate", help="phase-folded Patricia means against psi_E(log n)/H")
    os_.add_argument("--tree", type=parse_tree, default=None)
    os_.add_argument("--p", type=parse_prob, default=Fraction(1, 2))
    os_.add_argument("--grid", default="2^10..2^13")
    os_.add_argument("--per-period", type=int, default=4)
    _mc_opts(os_, reps=20)
    return parser


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _spec(args, n: int) -> ModelSpec:
    if args.model is None:
        raise UsageError("--model is required")
    try:
        return ModelSpec(args.model, n, args.p, args.beta)
    except ValueError as exc:
        raise UsageError(str(exc))


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_sample(args) -> int:
    spec = _spec(args, args.n)
    if args.seed is None:
        args.seed = secrets.randbits(63)
        log.info("seed: %d", args.seed)
    tree = sample(spec, RandomSource(args.seed))
    print(format_shape(tree) if args.format == "shape" else tree.code)
    return EXIT_OK


def constants_record(model: str, t: Tree, p=None, fourier_terms: int = asymptotics.DEFAULT_K_MAX,
                     max_denominator: int = asymptotics.DEFAULT_MAX_DENOMINATOR,
                     period: Optional[tuple[int, int]] = None) -> dict:
    """JSON-ready constants for one model and shape.

    ``constant`` is the limit of E N_t / n with n the model's size parameter
    (leaves for tries, beta-splitting and uniform trees; nodes of the
    underlying BST for ebst/cbst).
    """
    name = {"beta_split": "cb", "uniform_full": "uniform"}.get(model, model)
    rec: dict = {"model": name, "shape": format_shape(t), "code": t.code}
    src = None
    if name == "patricia":
        if p is None:
            raise UsageError("patricia needs --p")
        src = asymptotics.SourceParams.make(p, max_denominator, period)
        pi = exact.pi_t(t, p)
        rec["pi_t"] = str(pi) if isinstance(pi, Fraction) else float(pi)
        rec["entropy"] = src.H
        rec["periodicity"] = str(src.periodicity)
    if t.is_leaf:
        base = {"patricia": 1, "ebst": 1, "cbst": Fraction(1, 3), "cb": 1, "uniform": 1}[name]
        rec.update(constant=float(base), symbolic=str(base), fringe=0.5, fringe_exact="1/2",
                   qsin=1.0, qsin_exact="1", fourier=[], period=None)
        return rec
    fringe = asymptotics.limit_fringe(name, t, src, fourier_terms)
    qsin = asymptotics.limit_qsin(name, t, src, fourier_terms)
    if name == "patricia":
        mean = asymptotics.patricia_mean_const(t, src, fourier_terms)
        record = mean.to_record()
        rec.update(constant=record["constant"], symbolic=None, fourier=record["fourier"],
                   period=record["period"], tail_bound=mean.tail_bound)
        var = asymptotics.patricia_var_const(t, src, fourier_terms)
        rec["variance_constant"] = var.constant
    else:
        per_n = {
            "ebst": lambda: exact.ebst_beta(t),
            "cbst": lambda: exact.beta_hat(t),
            "cb": lambda: exact.cb_limit(t).count_per_leaf,
            "uniform": lambda: 2 * exact.uniform_limit(t),
        }[name]()
        rec.update(constant=float(per_n), symbolic=_fmt_exact(per_n), fourier=[], period=None)
        if name == "uniform":
            rec["variance_constant"] = float(exact.uniform_variance(t))
            rec["variance_exact"] = str(exact.uniform_variance(t))
    rec.update(fringe=_float(fringe), fringe_exact=_fmt_exact(fringe),
               qsin=_float(qsin), qsin_exact=_fmt_exact(qsin))
    return rec


def cmd_constants(args) -> int:
    if args.model is None or args.tree is None:
        raise UsageError("constants needs --model and --tree")
    try:
        rec = constants_record(args.model, args.tree, args.p, args.fourier_terms,
                               args.max_denominator, args.period)
    except ValueError as exc:
        raise UsageError(str(exc))
    print(json.dumps(rec, indent=2))
    return EXIT_OK


def cmd_tables(args) -> int:
    if args.format == "text":
        sys.stdout.write(tables.render_all())
        return EXIT_OK
    f, q = tables.fringe_table().formatted(), tables.qsin_table().formatted()
    if args.format == "json":
        print(json.dumps({"fringe": f, "qsin": q, "ratio_t4c_t4a": tables.ratio_row()}, indent=2))
    else:
        print("table,model," + ",".join(tables.TABLE_SHAPES))
        for name, tab in (("fringe", f), ("qsin", q)):
            for model in tables.TABLE_MODELS:
                print(f"{name},{model}," + ",".join(tab[model][s] for s in tables.TABLE_SHAPES))
    return EXIT_OK


def _serialize(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    extra = [k for k in (rows[0] if rows else {}) if k not in mclab.CSV_COLUMNS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(mclab.CSV_COLUMNS) + extra)
    for r in rows:
        w.writerow(["" if r.get(c) is None else r[c] for c in list(mclab.CSV_COLUMNS) + extra])
    return buf.getvalue()


def census_rows(stats: mclab.CensusStats) -> list[dict]:
    """Mean count, variance and fringe probability per recorded shape, plus totals.

    The row with shape code ">K" counts fringe subtrees above the cutoff, so
    count means over all rows of one n add up to the mean tree size.
    """
    model = stats.plan.spec.model
    rows: list[dict] = []
    for n in stats.plan.n_values:
        for code in stats.shape_codes(n):
            mo = stats.moments(n, code)
            fr = mclab.moments(stats.fringe(n, code))
            rows.append(dict(model=model, n=n, shape_code=code, stat="count_mean", value=mo.mean))
            rows.append(dict(model=model, n=n, shape_code=code, stat="count_var", value=mo.var))
            rows.append(dict(model=model, n=n, shape_code=code, stat="fringe_prob", value=fr.mean))
        if stats.plan.shapes is None:
            above = stats.sizes[n] - stats.totals(n)
            rows.append(dict(model=model, n=n, shape_code=f">{stats.plan.K}", stat="count_mean",
                             value=mclab.moments(above).mean))
        rows.append(dict(model=model, n=n, shape_code="*", stat="size_mean",
                         value=mclab.moments(stats.sizes[n]).mean))
        rows.append(dict(model=model, n=n, shape_code="*", stat="leafcount_mean",
                         value=mclab.moments(stats.leafcounts[n]).mean))
    return rows


def cmd_census(args) -> int:
    spec = _spec(args, args.n[0])
    shapes = tuple(t.code for t in args.shapes) if args.shapes else None
    try:
        plan = mclab.ExperimentPlan(spec, tuple(args.n), args.reps, args.max_leaves, args.seed,
                                    shapes, args.cladogram)
    except ValueError as exc:
        raise UsageError(str(exc))
    stats = mclab.run(plan, args.jobs)
    _emit(_serialize(census_rows(stats), args.format), args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = _spec(args, args.n[0])
    trees = args.tree or [NAMED["t2"], NAMED["t3"], NAMED["t4c"]]
    K = args.max_leaves or max(t.leaves for t in trees)
    try:
        plan = mclab.ExperimentPlan(spec, tuple(args.n), args.reps, K, args.seed,
                                    tuple(t.code for t in trees))
        stats = mclab.run(plan, args.jobs)
        report = mclab.compare(stats)
        if args.clt:
            for n in plan.n_values:
                for t in trees:
                    report.rows.extend(mclab.clt_diagnostic(stats, t, n).report_rows())
    except ValueError as exc:
        raise UsageError(str(exc))
    _emit(_serialize([r.as_dict() for r in report.rows], args.format), args.output)
    for r in report.failures():
        log.warning("verdict failed: %s n=%d shape=%s value=%.6g predicted=%.6g",
                    r.stat, r.n, r.shape_code, r.value, r.predicted if r.predicted is not None else float("nan"))
    return EXIT_OK if report.passed else EXIT_VERDICT


def cmd_oscillate(args) -> int:
    if args.tree is None:
        raise UsageError("oscillate needs --tree")
    try:
        grid = parse_grid(args.grid, args.per_period)
        scan = mclab.oscillation_scan(args.tree, args.p, grid, args.reps, args.seed, args.jobs)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(str(exc))
    log.info("period d=%.12g, predicted relative amplitude %.3g, amplitude/SE %.3g",
             scan.period, scan.relative_amplitude, scan.amplitude_to_se)
    _emit(_serialize(scan.rows(), args.format), args.output)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "constants": cmd_constants,
    "tables": cmd_tables,
    "census": cmd_census,
    "compare": cmd_compare,
    "oscillate": cmd_oscillate,
}


def _resolved(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if isinstance(v, Tree):
            v = format_shape(v)
        elif isinstance(v, list):
            v = [format_shape(x) if isinstance(x, Tree) else str(x) for x in v]
        elif isinstance(v, Fraction):
            v = str(v)
        out[k] = v
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
            _apply_config(sub, read_config(args.config))
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError) as exc:
        print(f"fringelab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    log.info("resolved configuration: %s", json.dumps(_resolved(args), default=str))
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fringelab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
