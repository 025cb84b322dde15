import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import pytest

from fringelab import cli, tables
from fringelab.cli import main, parse_grid, parse_prob, parse_size, parse_tree, split_list
from fringelab.tree import NAMED

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(["-q", *argv])
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------

def test_value_parsers():
    assert parse_prob("1/3") == Fraction(1, 3)
    assert parse_prob("0.25") == 0.25 and isinstance(parse_prob("0.25"), float)
    assert parse_size("2^17") == 131072
    assert parse_size("1e4") == 10_000
    assert parse_tree("t4c") == NAMED["t4c"]
    assert parse_tree("10100") == NAMED["t3"]
    assert parse_tree("(*,(*,*))") == NAMED["t3"]
    assert parse_grid("2^10..2^11", 2) == [1024, 1448, 2048]
    assert split_list("(*,*), (*,(*,*));t2") == ["(*,*)", "(*,(*,*))", "t2"]


@pytest.mark.parametrize("bad", ["0", "1", "3/2", "abc"])
def test_bad_probability_exits_two(capsys, bad):
    code, _, err = run(capsys, "constants", "--model", "patricia", "--tree", "t2", "--p", bad)
    assert code == 2
    assert "probability" in err


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def test_sample_golden(capsys):
    code, out, _ = run(capsys, "sample", "--model", "patricia", "--n", "5", "--p", "1/2", "--seed", "7")
    assert code == 0
    assert out.strip() == "(((*,*),*),(*,*))"


def test_sample_small_cases(capsys):
    assert run(capsys, "sample", "--model", "uniform", "--n", "2", "--seed", "1")[1].strip() == "(*,*)"
    assert run(capsys, "sample", "--model", "beta", "--n", "1", "--seed", "1")[1].strip() == "*"
    code, out, _ = run(capsys, "sample", "--model", "ebst", "--n", "3", "--seed", "2", "--format", "code")
    assert code == 0 and set(out.strip()) <= {"0", "1"} and len(out.strip()) == 7


def test_sample_without_seed_logs_it(capsys):
    code = main(["sample", "--model", "bst", "--n", "4"])
    _, err = capsys.readouterr()
    assert code == 0
    assert "seed:" in err and "resolved configuration" in err


def test_missing_model_is_usage_error(capsys):
    code, _, err = run(capsys, "sample", "--n", "4")
    assert code == 2 and "--model" in err


def test_unknown_subcommand(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_patricia_requires_p(capsys):
    assert run(capsys, "sample", "--model", "patricia", "--n", "4")[0] == 2


# ---------------------------------------------------------------------------
# constants and tables
# ---------------------------------------------------------------------------

def test_constants_cbst_symbolic(capsys):
    code, out, _ = run(capsys, "constants", "--model", "cbst", "--tree", "t2")
    rec = json.loads(out)
    assert code == 0
    assert rec["symbolic"] == "e^4/128 - e^2/8 + 233/384"
    # fringe = constant / (compressed size per BST node) = 3/2 * constant
    assert rec["fringe"] == pytest.approx(1.5 * rec["constant"], rel=1e-12)
    assert rec["constant"] == pytest.approx(0.1097, abs=5e-5)


def test_constants_ebst_and_uniform(capsys):
    rec = json.loads(run(capsys, "constants", "--model", "ebst", "--tree", "t3")[1])
    assert rec["fringe_exact"] == "1/24"
    rec = json.loads(run(capsys, "constants", "--model", "uniform", "--tree", "t2")[1])
    assert rec["fringe_exact"] == "1/8"
    assert rec["variance_exact"] == "1/32"


def test_constants_patricia(capsys):
    rec = json.loads(run(capsys, "constants", "--model", "patricia", "--tree", "t2", "--p", "1/3")[1])
    assert rec["pi_t"] == "4/9"
    assert rec["periodicity"] == "aperiodic"
    assert rec["fourier"] == []
    rec = json.loads(run(capsys, "constants", "--model", "patricia", "--tree", "t2", "--p", "1/2")[1])
    assert rec["period"] == pytest.approx(0.6931471805599453)
    assert rec["qsin"] == pytest.approx(0.7213, abs=5e-5)
    assert rec["variance_constant"] > 0
    assert len(rec["fourier"]) > 0


def test_constants_forced_period(capsys):
    rec = json.loads(run(capsys, "constants", "--model", "patricia", "--tree", "t2",
                         "--p", "1/2", "--period", "1,1")[1])
    assert rec["period"] == pytest.approx(0.6931471805599453)
    code, _, err = run(capsys, "constants", "--model", "patricia", "--tree", "t2",
                       "--p", "1/3", "--period", "1,1")
    assert code == 2 and "not periodic" in err


def test_constants_leaf_and_cb(capsys):
    rec = json.loads(run(capsys, "constants", "--model", "cb", "--tree", "*")[1])
    assert rec["fringe_exact"] == "1/2"
    rec = json.loads(run(capsys, "constants", "--model", "cb", "--tree", "t2")[1])
    assert rec["fringe"] == pytest.approx(0.1520, abs=5e-5)


def test_tables_text_matches_golden(capsys):
    code, out, _ = run(capsys, "tables")
    assert code == 0
    assert out == (GOLDEN / "tables.txt").read_text()


def test_tables_csv_and_json(capsys):
    rows = run(capsys, "tables", "--format", "csv")[1].strip().splitlines()
    assert len(rows) == 1 + 2 * len(tables.TABLE_MODELS)
    data = json.loads(run(capsys, "tables", "--format", "json")[1])
    assert set(data) == {"fringe", "qsin", "ratio_t4c_t4a"}


# ---------------------------------------------------------------------------
# Monte Carlo subcommands
# ---------------------------------------------------------------------------

def test_census_rows_add_up(capsys):
    code, out, _ = run(capsys, "census", "--model", "cb", "--n", "1000", "--reps", "2", "--max-leaves", "3")
    rows = csv_rows(out)
    assert code == 0
    means = [float(r["value"]) for r in rows if r["stat"] == "count_mean"]
    size = next(float(r["value"]) for r in rows if r["stat"] == "size_mean")
    assert sum(means) == pytest.approx(size) and size == 1999
    assert any(r["shape_code"] == ">3" for r in rows)


def test_census_json_and_output_file(capsys, tmp_path):
    target = tmp_path / "census.json"
    code, out, _ = run(capsys, "census", "--model", "uniform", "--n", "50", "--reps", "3",
                       "--shapes", "t2", "--format", "json", "--output", str(target))
    assert code == 0 and out == ""
    rows = json.loads(target.read_text())
    assert {r["shape_code"] for r in rows} == {"100", "*"}


def test_compare_pass_and_fail_exit_codes(capsys):
    code, out, _ = run(capsys, "compare", "--model", "ebst", "--n", "3000", "--reps", "30", "--tree", "t2")
    assert code == 0
    row = next(r for r in csv_rows(out) if r["stat"] == "fringe_prob")
    assert float(row["predicted"]) == pytest.approx(1 / 6)
    # tiny uniform trees are far from the limit: a genuine verdict failure
    code, _, err = run(capsys, "compare", "--model", "uniform", "--n", "8", "--reps", "400", "--tree", "t2")
    assert code == 1
    assert "verdict failed" in err


def test_compare_clt_rows(capsys):
    code, out, _ = run(capsys, "compare", "--model", "uniform", "--n", "500", "--reps", "200",
                       "--tree", "t2", "--clt")
    stats = {r["stat"] for r in csv_rows(out)}
    assert {"skew", "exkurt"} <= stats


def test_compare_clt_refuses_few_reps(capsys):
    code, _, err = run(capsys, "compare", "--model", "uniform", "--n", "100", "--reps", "10", "--clt")
    assert code == 2 and "200" in err


def test_oscillate(capsys):
    code, out, _ = run(capsys, "oscillate", "--tree", "t2", "--grid", "2^6..2^7", "--per-period", "2",
                       "--reps", "3")
    rows = csv_rows(out)
    assert code == 0
    assert [int(r["n"]) for r in rows] == [64, 91, 128]
    assert float(rows[0]["phase"]) == 0.0 and float(rows[2]["phase"]) == 0.0
    assert run(capsys, "oscillate", "--tree", "t2", "--p", "0.3", "--reps", "2")[0] == 2


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------

def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nmodel = patricia\nn = 5\np = 1/2\nseed = 7\n")
    code, out, _ = run(capsys, "--config", str(cfg), "sample")
    assert code == 0 and out.strip() == "(((*,*),*),(*,*))"
    code, out, _ = run(capsys, "--config", str(cfg), "sample", "--model", "uniform", "--n", "2")
    assert out.strip() == "(*,*)"


def test_config_lists_and_booleans(capsys, tmp_path):
    cfg = tmp_path / "census.cfg"
    cfg.write_text("model = uniform\nn = 40, 60\nreps = 2\nshapes = (*,*), (*,(*,*))\ncladogram = yes\n")
    code, out, _ = run(capsys, "--config", str(cfg), "census")
    rows = csv_rows(out)
    assert code == 0
    assert {r["n"] for r in rows} == {"40", "60"}
    assert {"100", "10100"} <= {r["shape_code"] for r in rows}


def test_config_round_trips_model_spec(capsys, tmp_path):
    cfg = tmp_path / "spec.cfg"
    cfg.write_text("model = patricia\nn = 9\np = 1/3\nseed = 4\n")
    a = run(capsys, "--config", str(cfg), "sample")[1]
    b = run(capsys, "sample", "--model", "patricia", "--n", "9", "--p", "1/3", "--seed", "4")[1]
    assert a == b


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "--config", str(cfg), "sample")[0] == 2
    cfg.write_text("no equals sign\n")
    assert run(capsys, "--config", str(cfg), "sample")[0] == 2
    assert run(capsys, "--config", str(tmp_path / "missing.cfg"), "sample")[0] == 2


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "fringelab", "-q", "sample", "--model", "uniform",
                          "--n", "2", "--seed", "0"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "(*,*)"
    assert cli.EXIT_USAGE == 2
