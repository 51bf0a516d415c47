"""
Tests for the dimension formulas and the cover-series abscissa estimate
"""

import pytest
from gmpy2 import mpq
from mpmath import mpf, almosteq, log, sqrt

from dimension_lab import (block_table, cover_series, critical_exponent, default_s_grid, theoretical_dimension)
from lab_errors import DomainError, InconclusiveError
from qfree_sets import AllIntegers, CoprimeTo, ExplicitTable, KFree, Smooth

POWERS_OF_TWO = ExplicitTable(limit=16, members=frozenset({1, 2, 4, 8, 16}), tail="smooth", tail_primes=(2,))
TOLERANCE = 0.05


def test_jarnik_besicovitch_value():
    verdict = theoretical_dimension(1, 3, 1, "w")
    assert verdict.value == mpq(2, 3)
    assert verdict.asserted
    assert verdict.source == "jarnik-besicovitch"


def test_wstar_interval_for_full_support():
    verdict = theoretical_dimension(2, 3, CoprimeTo(6), "wstar")
    assert verdict.interval == (mpq(2, 3), mpq(1))
    assert verdict.value is None
    assert verdict.to_json()["interval"] == ["2/3", "1"]
    assert verdict.source == "theorem1-bounds"
    assert verdict.gates["tau>1+1/(n-1)"]


def test_restricted_denominators_with_nu_zero():
    verdict = theoretical_dimension(1, 3, 0, "wq")
    assert verdict.value == mpq(1, 3)
    assert verdict.source == "borosh-fraenkel"
    assert theoretical_dimension(1, 3, POWERS_OF_TWO, "wq").value == mpq(1, 3)


def test_wstar_value_for_finite_support():
    verdict = theoretical_dimension(2, 3, Smooth((2,)), "wstar")
    assert verdict.value == mpq(1)


def test_failed_hypotheses_are_flagged_not_asserted():
    w = theoretical_dimension(1, 2, None, "w")
    assert not w.asserted and w.value is None
    assert "note" in w.to_json()
    wstar = theoretical_dimension(1, 3, 1, "wstar")
    assert not wstar.asserted
    assert wstar.gates["tau>1+1/(n-1)"] is None
    wq = theoretical_dimension(2, "3/2", 1, "wq")
    assert not wq.asserted


@pytest.mark.parametrize("args", [
    (0, 3, 1, "w"),
    (1, 1, 1, "w"),
    (1, 3, 2, "wq"),
    (1, 3, None, "wq"),
    (1, 3, 1, "v"),
    (1, 3, ExplicitTable(limit=4, members=frozenset({1, 2})), "wq"),
])
def test_theoretical_dimension_rejects(args):
    with pytest.raises(DomainError):
        theoretical_dimension(*args)


def test_cover_series_partial_sum():
    value = cover_series(AllIntegers(), 1, 3, 1, 1, 10)
    assert almosteq(value, 2 * mpf("1.5497677311665406904"), rel_eps=mpf(10) ** -15)


def test_cover_series_is_additive_and_decreasing():
    spec = KFree(2)
    whole = cover_series(spec, 2, 3, "4/5", 1, 2000)
    parts = cover_series(spec, 2, 3, "4/5", 1, 999) + cover_series(spec, 2, 3, "4/5", 1000, 2000)
    assert almosteq(whole, parts, rel_eps=mpf(10) ** -12)
    values = [cover_series(spec, 2, 3, s, 2, 500) for s in ("1/2", "1", "3/2", "2")]
    assert values == sorted(values, reverse=True)


def test_cover_series_grows_logarithmically_at_the_abscissa():
    spec = AllIntegers()
    gap = cover_series(spec, 1, 3, "2/3", 1, 10 ** 4) - cover_series(spec, 1, 3, "2/3", 1, 10 ** 3)
    assert abs(gap - mpf(2) ** (mpf(2) / 3) * log(10)) < 0.01


def test_cover_series_for_powers_of_two_is_geometric():
    value = cover_series(POWERS_OF_TWO, 1, 3, "1/2", 1, 2 ** 20)
    limit = sqrt(2) / (1 - 1 / sqrt(2))
    assert abs(value - limit) < 0.01


def test_cover_series_rejects_bad_ranges():
    with pytest.raises(DomainError):
        cover_series(AllIntegers(), 1, 3, 1, 10, 5)
    with pytest.raises(DomainError):
        cover_series(AllIntegers(), 1, 3, 0, 1, 5)


def test_default_grid():
    grid = default_s_grid(1)
    assert grid[0] == mpq(1, 20) and grid[-1] == 2
    assert len(grid) == 40


@pytest.mark.parametrize("spec,n,exact", [
    (AllIntegers(), 1, mpq(2, 3)),
    (POWERS_OF_TWO, 1, mpq(1, 3)),
    (KFree(2), 2, mpq(1)),
])
def test_critical_exponent_matches_the_formula(spec, n, exact):
    report = critical_exponent(spec, n, 3, Q_max=2 ** 20)
    assert report.exact_value == exact
    assert report.s_star is not None
    assert abs(report.s_star - float(exact)) <= TOLERANCE
    assert report.abs_error <= TOLERANCE


def test_critical_exponent_marks_empty_blocks():
    report = critical_exponent(POWERS_OF_TWO, 1, 3, Q_max=2 ** 16)
    assert report.skipped_blocks == []
    sparse = ExplicitTable(limit=16, members=frozenset({1, 4, 16}), tail="smooth", tail_primes=(2,))
    # members of {1, 4, 16, ...} are not divisor closed, but the series only needs a member list
    report = critical_exponent(sparse, 1, 3, Q_max=2 ** 16)
    assert report.skipped_blocks == [1, 3]


def test_critical_exponent_is_independent_of_threads():
    single = critical_exponent(AllIntegers(), 1, 3, Q_max=2 ** 16)
    pooled = critical_exponent(AllIntegers(), 1, 3, Q_max=2 ** 16, threads=4)
    assert single.to_json() == pooled.to_json()


def test_critical_exponent_preconditions():
    with pytest.raises(DomainError):
        critical_exponent(AllIntegers(), 1, 3, Q_max=2 ** 10)
    with pytest.raises(DomainError):
        critical_exponent(AllIntegers(), 1, 3, Q_max=2 ** 16, s_grid=["1/2", "3"])
    only_one = ExplicitTable(limit=1, members=frozenset({1}), tail="empty")
    with pytest.raises(InconclusiveError):
        critical_exponent(only_one, 1, 3, Q_max=2 ** 16)


def test_block_table_rows():
    report = critical_exponent(POWERS_OF_TWO, 1, 3, Q_max=2 ** 16, s_grid=["1/4", "1/2"])
    rows = block_table(report)
    assert len(rows) == 2 * 16
    assert set(rows[0]) == {"spec", "n", "tau", "s", "block_j", "block_sum", "slope"}
    assert rows[0]["s"] == "1/4"
