"""
Tests for divisibility-defined denominator sets
"""

import json

import numpy as np
import pytest
from gmpy2 import mpq
from mpmath import mpf, almosteq
from sympy import primerange

from lab_errors import DomainError, UndefinedFitError
from qfree_sets import (AllIntegers, BFree, CoprimeTo, ExplicitTable, KFree, Smooth, convergence_exponent,
                        counting_exponent_fit, euler_product_partial, member, member_table, members_up_to, parse_spec,
                        support_primes, verify_free_property)

POWERS_OF_TWO = ExplicitTable(limit=16, members=frozenset({1, 2, 4, 8, 16}), tail="smooth", tail_primes=(2,))


@pytest.mark.parametrize("spec,q,expected", [
    (CoprimeTo(6), 5, True),
    (KFree(2), 12, False),
    (BFree((4, 9)), 10, True),
    (BFree((4, 9)), 18, False),
    (Smooth((2, 3)), 72, True),
    (Smooth((2, 3)), 10, False),
    (AllIntegers(), 97, True),
    (POWERS_OF_TWO, 1024, True),
    (POWERS_OF_TWO, 12, False),
])
def test_member_examples(spec, q, expected):
    assert member(spec, q) == expected


def test_member_rejects_zero_and_undefined_table_range():
    with pytest.raises(DomainError):
        member(KFree(2), 0)
    table = ExplicitTable(limit=4, members=frozenset({1, 2, 4}))
    assert member(table, 4)
    with pytest.raises(DomainError):
        member(table, 5)


def test_tables_must_contain_one():
    with pytest.raises(DomainError):
        ExplicitTable(limit=4, members=frozenset({2, 4}))


@pytest.mark.parametrize("spec", [KFree(2), KFree(3), CoprimeTo(30), BFree((4, 9, 25)), Smooth((2, 5))])
def test_sieve_agrees_with_member(spec):
    table = spec.sieve(3000)
    assert not table[0]
    assert all(bool(table[q]) == spec.member(q) for q in range(1, 3001))


def test_member_table_is_indexed_by_q():
    table = member_table(KFree(2), 12)
    assert len(table) == 13
    assert [q for q in range(13) if table[q]] == [1, 2, 3, 5, 6, 7, 10, 11]
    with pytest.raises(DomainError):
        member_table(KFree(2), 0)


def test_members_up_to_lists_sorted_members():
    assert list(members_up_to(Smooth((2, 3)), 20)) == [1, 2, 3, 4, 6, 8, 9, 12, 16, 18]
    assert list(members_up_to(CoprimeTo(6), 12)) == [1, 5, 7, 11]


@pytest.mark.parametrize("spec", [KFree(2), KFree(3), KFree(4), CoprimeTo(2), CoprimeTo(6),
                                  CoprimeTo(30), BFree((4, 9, 25))])
def test_free_property_holds_up_to_1e5(spec):
    report = verify_free_property(spec, 10 ** 5)
    assert report.ok
    assert report.to_json()["violations"] == []


def test_free_property_on_a_small_table():
    table = ExplicitTable(limit=4, members=frozenset({1, 2, 4}))
    assert verify_free_property(table, 4).ok


def test_free_property_flags_a_set_that_is_not_divisor_closed():
    # 6 is listed but its divisor 3 is not
    table = ExplicitTable(limit=6, members=frozenset({1, 2, 6}))
    assert verify_free_property(table, 6).violations == [6]


@pytest.mark.parametrize("k", [2, 3, 4])
def test_kfree_matches_bfree_of_prime_powers(k):
    # below 100**k every prime whose k-th power fits is at most 100
    limit = min(100 ** k, 10 ** 6)
    powers = BFree(tuple(p ** k for p in primerange(2, 101)))
    assert np.array_equal(KFree(k).sieve(limit), powers.sieve(limit))


def test_support_examples():
    assert support_primes(CoprimeTo(6), 10).primes == [5, 7]
    assert support_primes(KFree(2), 10).primes == [2, 3, 5, 7]
    assert support_primes(BFree((2,)), 20).primes == [3, 5, 7, 11, 13, 17, 19]
    assert support_primes(POWERS_OF_TWO, 30).primes == [2]


def test_support_reports_undecided_primes():
    table = ExplicitTable(limit=10, members=frozenset({1, 2, 3}))
    report = support_primes(table, 13, scan_bound=100)
    assert report.primes == [2, 3]
    assert report.inconclusive == [5, 7, 11, 13]


@pytest.mark.parametrize("spec,expected", [
    (CoprimeTo(2), mpq(1)),
    (CoprimeTo(6), mpq(1)),
    (CoprimeTo(30), mpq(1)),
    (KFree(2), mpq(1)),
    (KFree(3), mpq(1)),
    (BFree((4, 9)), mpq(1)),
    (POWERS_OF_TWO, mpq(0)),
    (Smooth((2, 3, 5)), mpq(0)),
])
def test_convergence_exponent_by_support(spec, expected):
    result = convergence_exponent(spec)
    assert result.method == "exact-by-support"
    assert result.value == expected


def test_convergence_exponent_unknown_without_a_tail_rule():
    result = convergence_exponent(ExplicitTable(limit=10, members=frozenset({1, 2})))
    assert result.value is None
    assert result.method == "unknown-exact"


def test_counting_fit_for_perfect_squares():
    def is_square(q):
        root = int(q ** 0.5 + 0.5)
        return root * root == q

    result = counting_exponent_fit(is_square, [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    assert result.method == "counting-fit"
    assert abs(result.value - 0.5) < 0.02


def test_counting_fit_for_squarefree_numbers():
    result = counting_exponent_fit(KFree(2), [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    assert abs(result.value - 1.0) < 0.02


def test_counting_fit_is_undefined_for_a_single_member():
    only_one = ExplicitTable(limit=1, members=frozenset({1}), tail="empty")
    with pytest.raises(UndefinedFitError):
        counting_exponent_fit(only_one, [10, 100, 1000])


def test_counting_fit_validates_the_grid():
    with pytest.raises(DomainError):
        counting_exponent_fit(KFree(2), [100, 10, 1000])
    with pytest.raises(DomainError):
        counting_exponent_fit(KFree(2), [10, 100])


def test_euler_partial_sums_for_squarefree():
    report = euler_product_partial(KFree(2), 2, 10)
    left = mpf(1) / 4 + mpf(1) / 9 + mpf(1) / 25 + mpf(1) / 49
    middle = sum(mpf(1) / q ** 2 for q in (1, 2, 3, 5, 6, 7, 10))
    assert almosteq(report.left_sum, left, rel_eps=mpf(10) ** -12)
    assert almosteq(report.q_partial_sum, middle, rel_eps=mpf(10) ** -12)
    assert report.left_holds and report.right_holds


def test_euler_partial_sums_for_odd_numbers():
    report = euler_product_partial(CoprimeTo(2), 2, 3)
    assert almosteq(report.left_sum, mpf(1) / 9, rel_eps=mpf(10) ** -12)
    assert almosteq(report.q_partial_sum, 1 + mpf(1) / 9, rel_eps=mpf(10) ** -12)


@pytest.mark.parametrize("spec", [KFree(2), CoprimeTo(6), BFree((4, 9)), Smooth((2, 3)), AllIntegers()])
def test_euler_ordering_for_large_nu(spec):
    report = euler_product_partial(spec, 10, 100)
    assert report.left_holds and report.right_holds
    assert report.right_product - 1 < mpf(10) ** -2


def test_euler_rejects_non_positive_nu():
    with pytest.raises(DomainError):
        euler_product_partial(KFree(2), 0, 10)


def test_parse_spec_literals(tmp_path):
    assert parse_spec("kfree:2") == KFree(2)
    assert parse_spec("coprime:6") == CoprimeTo(6)
    assert parse_spec("bfree:9,4") == BFree((4, 9))
    assert parse_spec("smooth:3,2") == Smooth((2, 3))
    assert parse_spec("all") == AllIntegers()

    path = tmp_path / "table.json"
    path.write_text(json.dumps({"N": 8, "members": [1, 2, 4, 8], "tail": {"rule": "smooth", "primes": [2]}}))
    table = parse_spec(f"table:@{path}")
    assert table.member(64) and not table.member(6)


@pytest.mark.parametrize("literal", ["bogus", "kfree:x", "kfree:1", "coprime:", "smooth:4", "table:@missing.json"])
def test_parse_spec_rejects_malformed_literals(literal):
    with pytest.raises(DomainError):
        parse_spec(literal)
