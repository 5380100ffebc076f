import hashlib
import json
from fractions import Fraction

import pytest

from qanho.basis import sample_curves
from qanho.hill import eigenvector_matrix
from qanho.precision import make_context
from qanho.report import (
    HILL_KEYS,
    HILL_SECTION_VALUE,
    PUBLISHED_LINES,
    REFERENCE_TEMPLATE,
    SERIES_KEYS,
    RunReport,
    compare_digits,
    digit_frequencies,
    emit_curves_csv,
    emit_pgm,
    emit_report,
    parse_report,
    reference_known_digits,
)

CTX = make_context(30)


@pytest.mark.parametrize("s, expected", [("1.0604", 4), ("1.060362090", 10), ("2.0", 0), ("-1.06", 0), ("10.6", 0)])
def test_compare_examples(s, expected):
    assert compare_digits(s) == expected


def test_compare_symmetric_and_exponents():
    a, b = "1.0603620904841829", "1.06036209048419"
    assert compare_digits(a, b) == compare_digits(b, a) == 14
    assert compare_digits("1.0603e0", "1.0603") == 5
    assert compare_digits("0.00123", "1.23e-3") == 3
    with pytest.raises(ValueError):
        compare_digits("abc")


def test_reference_against_itself():
    assert compare_digits(REFERENCE_TEMPLATE) == len(reference_known_digits()) == 1184


def test_reference_layout():
    assert len(PUBLISHED_LINES) == 13
    assert REFERENCE_TEMPLATE.count("?") == 11
    assert len(REFERENCE_TEMPLATE.replace(".", "")) == 1195
    # 99 decimals per printed line once each lost digit is restored
    decimals = REFERENCE_TEMPLATE.split(".")[1]
    assert [i for i, ch in enumerate(decimals) if ch == "?"] == [99 * k - 1 for k in range(2, 13)]


def test_reference_checksum_frozen():
    known = reference_known_digits()
    assert hashlib.sha256(known.encode()).hexdigest() == (
        "3b3f5a5edc98d91aa5092a7ba8ead1086b624fdce6c3a49b6af4a51048349ceb"
    )


def test_hill_section_value_agrees_on_prefix():
    assert compare_digits(HILL_SECTION_VALUE) >= 120


def test_digit_frequency_examples():
    s = digit_frequencies("0123456789")
    assert s.counts == (1,) * 10 and s.chi_square == 0
    s = digit_frequencies("0000000000")
    assert s.counts[0] == 10 and s.chi_square == 90
    with pytest.raises(ValueError):
        digit_frequencies("")
    with pytest.raises(ValueError):
        digit_frequencies("12a")


def test_digit_frequencies_of_reference_frozen():
    s = digit_frequencies(reference_known_digits())
    assert s.counts == (127, 111, 125, 112, 135, 111, 115, 115, 112, 121)
    assert s.chi_square == Fraction(192, 37)
    assert s.length == 1184


def _series_report(**kw):
    base = dict(
        method="series", n=1688, xi="7.5", working_digits=316,
        lo="1.0603620904", hi="1.0603620905", certified_digits="1.060362090",
        certified_count=10, reference_match=10, timings=[0.5, 1.25],
    )
    base.update(kw)
    return RunReport(**base)


def test_json_schema_and_round_trip():
    r = _series_report()
    data = emit_report(r)
    d = json.loads(data)
    assert tuple(d) == SERIES_KEYS
    assert parse_report(data) == r
    assert "timings" not in json.loads(emit_report(r, include_timings=False))


def test_hill_keys():
    r = RunReport(
        method="hill", states=2, working_digits=50, lo="1.07", hi="1.08",
        certified_digits="1.0", certified_count=2, reference_match=2,
        eigenvalues=[["1.07", "1.08"]],
    )
    assert tuple(json.loads(emit_report(r))) == HILL_KEYS


def test_text_report():
    text = emit_report(_series_report(), "text").decode()
    assert "certified: 10 digits" in text
    assert "timings" in text
    assert "timings" not in emit_report(_series_report(), "text", include_timings=False).decode()
    with pytest.raises(ValueError):
        emit_report(_series_report(), "xml")


def test_report_validation():
    with pytest.raises(ValueError):
        _series_report(method="magic")
    with pytest.raises(ValueError):
        _series_report(certified_count=50)


def test_csv_rows():
    c = sample_curves(4, 1, 2, 2, 1, 2, CTX)
    lines = emit_curves_csv(c).decode().splitlines()
    assert lines[0] == "x,lambda,y,y_prime"
    assert len(lines) == 1 + 4
    # x = 1, lambda = 1: y = 13/24, y' = -5/6
    assert "1.0000000000000000000,1.0000000000000000000,0.54166666666666666667,-0.83333333333333333333" in lines
    big = sample_curves(80, "1.05", "1.08", 10, 4, 200, CTX)
    assert len(emit_curves_csv(big).decode().splitlines()) == 1 + 2000


def _pgm_pixels(data):
    header, rest = data.split(b"\n", 1)
    assert header == b"P5"
    dims, rest = rest.split(b"\n", 1)
    maxval, pixels = rest.split(b"\n", 1)
    w, h = map(int, dims.split())
    assert maxval == b"255" and len(pixels) == w * h
    return w, h, pixels


def test_pgm_examples():
    one, zero = CTX.real(1), CTX.real(0)
    w, h, px = _pgm_pixels(emit_pgm([[one, zero], [zero, one]]))
    assert (w, h) == (2, 2) and list(px) == [255, 0, 0, 255]
    _, _, px = _pgm_pixels(emit_pgm([[CTX.real("0.3")]]))
    assert list(px) == [255]
    _, _, px = _pgm_pixels(emit_pgm([[zero, zero]]))
    assert list(px) == [0, 0]
    _, _, px = _pgm_pixels(emit_pgm([[Fraction(1), Fraction(-1, 10**8)]]))
    assert px[0] == 255 and 0 < px[1] < 255
    with pytest.raises(ValueError):
        emit_pgm([])


def test_pgm_checkerboard():
    m = eigenvector_matrix(100, make_context(30), "1e-20")
    w, h, px = _pgm_pixels(emit_pgm(m))
    assert (w, h) == (100, 100)
    for r in range(100):
        for c in range(100):
            if m[r][c].is_zero():
                assert px[r * 100 + c] == 0
    # each column lives on one parity of the basis index
    for c in range(100):
        parities = {r % 2 for r in range(100) if not m[r][c].is_zero()}
        assert len(parities) == 1
