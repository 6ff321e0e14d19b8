import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mutsamp.errors import AllEquivalent, RangeError, ZeroBaseline
from mutsamp.faultsim import CoverageCurve
from mutsamp.metrics import (
    EfficiencyRow, delta_fc, delta_l, delta_l_from_lengths, format_nlfce, format_pct,
    mutation_score, nlfce, round_sig,
)

# (circuit, operator, delta_fc_pct, delta_l_pct, printed nlfce)
PUBLISHED_ROWS = [
    ("b01", "LOR", "0.66", "10.84", "+7.16"),
    ("b01", "VR", "1.36", "17.43", "+23.7"),
    ("b01", "CVR", "1.72", "18.81", "+32.3"),
    ("b01", "CR", "2.32", "37.60", "+87.3"),
    ("b03", "VR", "4.10", "28.39", "+116"),
    ("b03", "CVR", "8.08", "55.29", "+447"),
    ("b03", "CR", "9.57", "49.89", "+477"),
    ("c432", "LOR", "4.14", "32.35", "+134"),
    ("c432", "VR", "9.40", "56.62", "+532"),
    ("c432", "CVR", "11.67", "81.86", "+955"),
    ("c499", "LOR", "4.72", "64.26", "+303"),
    ("c499", "VR", "6.18", "73.10", "+452"),
    ("c499", "CVR", "4.53", "84.96", "+385"),
]


def last_digit_unit(printed: str) -> float:
    _, _, frac = printed.partition(".")
    return 10.0 ** -len(frac)


def curve(counts, total=100):
    return CoverageCurve(tuple(counts), total)


def published_row_matches(row) -> bool:
    _, _, dfc, dl, printed = row
    got = float(format_nlfce(nlfce(float(dfc), float(dl))))
    return abs(got - float(printed)) <= last_digit_unit(printed) + 1e-9


@pytest.mark.parametrize("row", PUBLISHED_ROWS, ids=lambda r: f"{r[0]}-{r[1]}")
def test_published_rows_product_identity(row):
    assert published_row_matches(row)


@pytest.mark.parametrize("k, m, e, expected", [
    (50, 100, 0, 0.5), (10, 12, 2, 1.0), (0, 7, 0, 0.0), (3, 4, 1, 1.0),
])
def test_mutation_score_examples(k, m, e, expected):
    ms = mutation_score(k, m, e)
    assert ms.value == expected
    assert ms.exact == Fraction(k, m - e)


def test_mutation_score_errors():
    with pytest.raises(AllEquivalent):
        mutation_score(0, 5, 5)
    with pytest.raises(RangeError):
        mutation_score(4, 5, 2)
    with pytest.raises(RangeError):
        mutation_score(0, 3, 4)
    with pytest.raises(RangeError):
        mutation_score(-1, 3, 0)


def test_percent_two_decimals():
    assert mutation_score(2, 3, 0).percent == "66.67"


@given(st.integers(1, 500).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, m - 1)))
       .flatmap(lambda me: st.tuples(st.just(me[0]), st.just(me[1]), st.integers(0, me[0] - me[1]))))
def test_ms_bounds(case):
    m, e, k = case
    assert 0 <= mutation_score(k, m, e).value <= 1


def test_delta_fc_examples():
    assert delta_fc(curve([90]), curve([80]), 1) == pytest.approx(12.5)
    assert delta_fc(curve([80, 85]), curve([80, 85]), 2) == 0.0
    assert delta_fc(curve([80]), curve([90]), 1) == pytest.approx(-11.111, abs=1e-3)
    with pytest.raises(ZeroBaseline):
        delta_fc(curve([10]), curve([0]), 1)


@given(st.integers(0, 100), st.integers(1, 100))
def test_delta_fc_sign(m, r):
    d = delta_fc(curve([m]), curve([r]), 1)
    assert (d > 0) == (m > r) and (d == 0) == (m == r)


def test_delta_l_examples():
    mfc = curve([5] * 9 + [60])
    rfc = curve([min(60, t * 3 // 2) for t in range(1, 1001)])
    assert rfc.length_to_reach(Fraction(60, 100), 1000) == 40
    r = delta_l(mfc, rfc, cap=1000)
    assert r.value == 75.0 and r.random_length == 40 and not r.lower_bound
    assert delta_l(mfc, curve([5] * 9 + [60]), cap=10).value == 0.0
    never = delta_l(mfc, curve([10] * 1000), cap=1000)
    assert never.value == 99.0 and never.lower_bound
    assert delta_l_from_lengths(10, 40) == 75.0


def test_delta_l_preconditions():
    with pytest.raises(ValueError):
        delta_l(curve([]), curve([1]), cap=5)
    with pytest.raises(ValueError):
        delta_l(curve([1, 2, 3]), curve([1]), cap=2)


def test_nlfce_examples():
    assert nlfce(4.14, 32.35) == pytest.approx(133.929)
    assert format_nlfce(nlfce(4.14, 32.35)) == "+134"
    assert format_nlfce(nlfce(0.66, 10.84)) == "+7.15"
    assert nlfce(0, 42.0) == 0
    assert format_nlfce(0.0) == "0"
    with pytest.raises(ValueError):
        nlfce(math.inf, 1)


@pytest.mark.parametrize("x, text", [
    (133.9, "+134"), (7.1544, "+7.15"), (87.2, "+87.2"), (955.3, "+955"), (-3.204, "-3.20"),
    (1234.5, "+1230"), (0.0123, "+0.0123"), (99.96, "+100"),
])
def test_nlfce_formatting(x, text):
    assert format_nlfce(x) == text


def test_round_sig_and_pct():
    assert round_sig(0.012345) == 0.0123
    assert format_pct(12.5) == "12.50"


def test_row_product_exact():
    row = EfficiencyRow("c", "LOR", 0.9, 0.8, 10, 40, 12.5, 75.0)
    assert row.nlfce == 12.5 * 75.0
    assert row.as_dict()["nlfce"] == row.nlfce
