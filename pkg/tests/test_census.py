import csv
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bolzalab import census as cen
from bolzalab import hyperbolic as hyp
from bolzalab.errors import BudgetExceeded, NotHyperbolic

SYSTOLE = 2 * math.acosh(1 + math.sqrt(2))
words = st.lists(st.integers(0, 7), min_size=1, max_size=8).map(tuple)


def test_systole(census8):
    assert census8[0].length == pytest.approx(SYSTOLE, abs=1e-12)
    # the Bolza surface carries 12 systoles
    assert sum(1 for r in census8 if abs(r.length - SYSTOLE) < 1e-9) == 12


def test_census_to_three_contains_only_systoles():
    c = cen.enumerate(L=3.06)
    assert len(c) == 12
    assert all(r.primitive for r in c)
    assert all(abs(r.length - SYSTOLE) < 1e-9 for r in c)


def test_lengths_follow_traces(census8):
    for r in census8:
        assert r.length == pytest.approx(2 * math.acosh(r.trace / 2), abs=1e-12)
        assert r.length <= 8.0 + 1e-9


def test_traces_are_arithmetic(census8):
    # the group is arithmetic: traces are a + b sqrt2 with integer a, b and |a - b sqrt2| <= 2
    r2 = math.sqrt(2)
    for r in census8:
        found = False
        for a in range(math.floor(r.trace / 2) - 2, math.ceil(r.trace / 2) + 3):
            b = (r.trace - a) / r2
            if abs(b - round(b)) < 1e-7 and abs(a - round(b) * r2) <= 2 + 1e-9:
                found = True
        assert found, r


def test_closed_geodesics_close(census8):
    assert max(r.closure_residual() for r in census8) < 1e-8


def test_records_are_distinct_classes(census8):
    keys = {(round(r.length, 8), r.word) for r in census8}
    assert len(keys) == len(census8)
    assert not census8.flags


def test_smaller_bound_is_prefix(census5, census8):
    small = [(round(r.length, 9), r.word) for r in census5]
    big = [(round(r.length, 9), r.word) for r in census8 if r.length <= 5.0 + 1e-9]
    assert small == big
    assert census8.counting(5.0) == len(census5)


def test_proper_powers_flagged(census8):
    for r in census8:
        if not r.primitive:
            # some primitive class has a length dividing this one
            assert any(p.primitive and abs(r.length / p.length - round(r.length / p.length)) < 1e-9
                       and round(r.length / p.length) >= 2 for p in census8)
    squares = [r for r in census8 if abs(r.length - 2 * SYSTOLE) < 1e-9]
    assert squares and all(not r.primitive for r in squares)


def test_axis_starts_on_geodesic(census8):
    r = census8[5]
    z = r.axis(0.0, reduce=False).z
    # a point on the axis is moved by exactly the translation length
    assert hyp.hyperbolic_distance(z, r.element.apply_disk(z)) == pytest.approx(r.length, abs=1e-9)
    z_end = r.axis(r.length, reduce=False).z
    assert abs(z_end - r.element.apply_disk(z)) < 1e-9 or abs(z_end - r.element.inverse().apply_disk(z)) < 1e-9


@given(words, st.integers(0, 7))
def test_canonical_word_is_rotation_and_inverse_invariant(w, k):
    k = k % len(w)
    rotated = w[k:] + w[:k]
    assert cen.canonical_word([w]) == cen.canonical_word([rotated])
    assert cen.canonical_word([w]) == cen.canonical_word([cen.inverse_word(w)])


@given(words)
def test_inverse_word_is_involution(w):
    assert cen.inverse_word(cen.inverse_word(w)) == w


def test_axis_frame_rejects_elliptic():
    with pytest.raises(NotHyperbolic):
        cen.axis_frame(1.0 + 0j, 0j)


def test_budget_and_argument_errors():
    with pytest.raises(BudgetExceeded):
        cen.enumerate(L=30.0)
    with pytest.raises(ValueError):
        cen.enumerate(L=0.0)


def test_csv_roundtrip(tmp_path, census5):
    path = tmp_path / "census.csv"
    cen.write_csv(census5, path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == len(census5)
    for row, r in zip(rows, census5):
        assert float(row["length"]) == r.length
        assert float(row["trace"]) == r.trace
        assert row["word"] == r.word_string
