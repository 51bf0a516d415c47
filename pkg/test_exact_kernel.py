"""
Tests for the exact arithmetic kernel
"""

import pytest
from gmpy2 import mpq, mpz
from sympy import n_order, totient

from exact_kernel import (Ordering, brute_force_order, compare_to_power, compare_with_bound, digit_count,
                          estimated_digits, exceeds_digit_budget, is_prime, least_power_exceeding, mod_pow,
                          multiplicative_order, p_adic_valuation, power_exceeds, prime_power_order, to_rational)
from lab_errors import DomainError, IterationCapError


def test_to_rational_reads_fractions_and_exact_decimals():
    assert to_rational("5/2") == mpq(5, 2)
    assert to_rational("6/4") == mpq(3, 2)
    assert to_rational("3") == mpq(3)
    assert to_rational("0.25") == mpq(1, 4)
    assert to_rational("-1.5") == mpq(-3, 2)
    assert to_rational(7) == mpq(7)
    assert to_rational("0/5").denominator == 1


def test_to_rational_refuses_floats_and_garbage():
    with pytest.raises(DomainError):
        to_rational(0.5)
    with pytest.raises(DomainError):
        to_rational("1/0")
    with pytest.raises(DomainError):
        to_rational("abc")


def test_mod_pow_examples():
    assert mod_pow(2, 10, 1000) == 24
    assert mod_pow(7, 0, 5) == 1
    assert mod_pow(3, 262144, 2 ** 20) == 1


def test_mod_pow_rejects_small_modulus():
    with pytest.raises(DomainError):
        mod_pow(2, 3, 1)


def test_mod_pow_is_multiplicative_in_the_exponent():
    for base, e1, e2, m in [(3, 17, 40, 97), (10, 123, 456, 1001), (2, 5, 9, 64)]:
        assert mod_pow(base, e1 + e2, m) == mod_pow(base, e1, m) * mod_pow(base, e2, m) % m


@pytest.mark.parametrize("modulus,base,expected", [
    (3, 2, 2),
    (4, 3, 2),
    (27, 2, 18),
    (2 ** 20, 3, 2 ** 18),
])
def test_multiplicative_order_examples(modulus, base, expected):
    assert multiplicative_order(modulus, base) == expected


def test_multiplicative_order_needs_a_unit():
    with pytest.raises(DomainError):
        multiplicative_order(6, 4)
    with pytest.raises(DomainError):
        multiplicative_order(1, 1)


def test_huge_prime_power_order_uses_lifting():
    # order of 2 modulo 3^262147 is 2 * 3^262146; brute force would never finish
    assert prime_power_order(3, 262147, 2) == 2 * 3 ** 262146


def test_large_prime_squared_takes_the_lifting_path():
    p = 1000003
    modulus = p ** 2
    order = multiplicative_order(modulus, 2, iteration_cap=2 * 10 ** 6)
    assert order == prime_power_order(p, 2, 2)
    assert mod_pow(2, order, modulus) == 1
    # 1000003 is not a Wieferich prime, so the order picks up the factor p
    assert order % p == 0
    assert order > 2 * 10 ** 6


def test_large_prime_power_with_composite_root_is_not_split():
    with pytest.raises(IterationCapError):
        multiplicative_order((1000003 * 1000033) ** 2, 2, iteration_cap=1000)


def test_fast_path_matches_brute_force_on_small_prime_powers():
    for p in (2, 3, 5, 7, 11, 13):
        e = 1
        while p ** e <= 10 ** 5:
            modulus = p ** e
            for base in range(2, 30):
                if base % p == 0:
                    continue
                assert prime_power_order(p, e, base) == brute_force_order(modulus, base)
            e += 1


def test_order_divides_totient_and_matches_sympy():
    for modulus in (15, 21, 100, 1001, 9991):
        for base in (2, 3, 7, 11):
            if modulus % base == 0 or (modulus % 2 == 0 and base % 2 == 0):
                continue
            w = multiplicative_order(modulus, base)
            assert totient(modulus) % w == 0
            assert w == n_order(base, modulus)


def test_brute_force_order_stops_at_the_cap():
    with pytest.raises(IterationCapError) as info:
        brute_force_order(10007, 5, iteration_cap=10)
    assert info.value.cap == 10


@pytest.mark.parametrize("r,q,tau,expected", [
    ("1/12", 3, "2", Ordering.LESS),
    ("1/9", 3, "2", Ordering.EQUAL),
    ("1/13", 3, "5/2", Ordering.GREATER),
])
def test_compare_to_power_examples(r, q, tau, expected):
    assert compare_to_power(r, q, tau) == expected


def test_compare_to_power_limits_tau_denominator():
    with pytest.raises(DomainError):
        compare_to_power("1/2", 3, "19/9")


def test_compare_to_power_is_monotone_along_a_grid():
    grid = [mpq(1, d) for d in range(200, 1, -1)]
    seen_greater = False
    for r in grid:
        verdict = compare_to_power(r, 5, "5/2")
        if seen_greater:
            assert verdict == Ordering.GREATER
        seen_greater = seen_greater or verdict == Ordering.GREATER


def test_compare_with_bound_handles_zero_scale_and_q_one():
    assert compare_with_bound(0, 7, 3) == Ordering.LESS
    assert compare_with_bound("1/2", 1, 3) == Ordering.LESS
    assert compare_with_bound(1, 1, 3) == Ordering.EQUAL
    assert compare_with_bound("1/8", 2, 3, scale=1) == Ordering.EQUAL
    assert compare_with_bound("1/8", 2, 3, scale="1/2") == Ordering.GREATER


def test_power_exceeds_and_least_power_exceeding():
    assert power_exceeds(5, "1/2", 2)
    assert not power_exceeds(4, "1/2", 2)
    assert least_power_exceeding("1/2", 2) == 5
    assert least_power_exceeding(2, 2) == 2
    assert least_power_exceeding(1, 3) == 4


def test_small_helpers():
    assert is_prime(2) and is_prime(65537)
    assert not is_prime(1) and not is_prime(91)
    assert p_adic_valuation(48, 2) == 4
    assert p_adic_valuation(7, 3) == 0
    assert digit_count(0) == 1
    assert digit_count(99999) == 5
    assert digit_count(10 ** 20) == 21


def test_digit_estimates_without_materialising():
    assert estimated_digits(3, 262147) == digit_count(mpz(3) ** 262147)
    assert estimated_digits(2, 20) == digit_count(2 ** 20)
    assert not exceeds_digit_budget(3, 262147, 10 ** 6)
    assert exceeds_digit_budget(2, 2 * 3 ** 262146, 10 ** 6)
