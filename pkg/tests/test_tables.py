from fractions import Fraction
from pathlib import Path

import pytest

from fringelab import tables

GOLDEN = Path(__file__).parent / "golden" / "tables.txt"

FRINGE = {
    "patricia": ["0.1803", "0.0451", "0.0075", "0.0225"],
    "ebst": ["0.1667", "0.0417", "0.0083", "0.0167"],
    "cbst": ["0.1645", "0.0418", "0.0086", "0.0159"],
    "cb": ["0.1520", "0.0380", "0.0084", "0.0127"],
    "uniform": ["0.1250", "0.0312", "0.0078", "0.0078"],
}
QSIN = {
    "patricia": ["0.7213", "0.2705", "0.0601", "0.1803"],
    "ebst": ["0.6667", "0.2500", "0.0667", "0.1333"],
    "cbst": ["0.6581", "0.2507", "0.0690", "0.1273"],
    "cb": ["0.6079", "0.2280", "0.0675", "0.1013"],
    "uniform": ["0.5000", "0.1875", "0.0625", "0.0625"],
}


@pytest.mark.parametrize("model", tables.TABLE_MODELS)
def test_fringe_row(model):
    row = tables.fringe_table().formatted()[model]
    assert [row[s] for s in tables.TABLE_SHAPES] == FRINGE[model]


@pytest.mark.parametrize("model", tables.TABLE_MODELS)
def test_qsin_row(model):
    row = tables.qsin_table().formatted()[model]
    assert [row[s] for s in tables.TABLE_SHAPES] == QSIN[model]


def test_rendering_matches_golden_file():
    assert tables.render_all() == GOLDEN.read_text()


def test_half_even_rounding():
    assert tables.round4(Fraction(1, 32)) == "0.0312"
    assert tables.round4(Fraction(3, 32)) == "0.0938"
    assert tables.round4(0.16666666) == "0.1667"


def test_ratio_row():
    ratios = tables.ratio_row()
    assert tables.exact_ratio("patricia") == 3
    assert tables.exact_ratio("ebst") == 2
    assert tables.exact_ratio("cb") == Fraction(3, 2)
    assert tables.exact_ratio("uniform") == 1
    assert tables.exact_ratio("cbst") is None
    assert ratios["cbst"] == pytest.approx(1.846, abs=5e-4)
    for model in ("patricia", "ebst", "cb", "uniform"):
        assert ratios[model] == pytest.approx(float(tables.exact_ratio(model)), rel=1e-12)
