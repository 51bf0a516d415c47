"""
Exact arithmetic kernel
Arbitrary-precision rationals, modular powers and multiplicative orders used by every other module
"""

import logging
from enum import Enum
from typing import Union, Optional, Tuple

import gmpy2
from gmpy2 import mpz, mpq
from mpmath import mp, mpf, floor as mp_floor, log10 as mp_log10
from sympy import isprime, perfect_power

from lab_errors import DomainError, IterationCapError

logger = logging.getLogger(__name__)

# ExactRational is GMP's reduced fraction: denominator >= 1, zero stored as 0/1
ExactRational = type(mpq(0))

# compare_to_power raises q to the numerator of tau and the fraction to its denominator
MAX_TAU_DENOMINATOR = 8

DEFAULT_ORDER_ITERATION_CAP = 10 ** 7
SMALL_FACTOR_BOUND = 10 ** 5


class Ordering(Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


RationalLike = Union[int, str, ExactRational]


def to_rational(value: RationalLike) -> ExactRational:
    """
    Parse an exact rational from an int, an mpq or a string like "5/2" or "3"

    Decimal strings such as "2.5" are accepted only because they are exact; floats are refused.
    """
    if isinstance(value, float):
        raise DomainError(f"floats are not exact rationals: {value!r}")
    if isinstance(value, ExactRational):
        return value
    if isinstance(value, (int, type(mpz(0)))):
        return mpq(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/", 1)
                if int(den) == 0:
                    raise DomainError(f"zero denominator in {value!r}")
                return mpq(int(num), int(den))
            if "." in text:
                whole, frac = text.split(".", 1)
                sign = -1 if whole.startswith("-") else 1
                digits = int(whole.lstrip("+-") or "0") * 10 ** len(frac) + int(frac or "0")
                return mpq(sign * digits, 10 ** len(frac))
            return mpq(int(text))
        except ValueError:
            raise DomainError(f"not an exact rational: {value!r}")
    raise DomainError(f"cannot read {type(value).__name__} as an exact rational")


def is_prime(n: int) -> bool:
    """Primality, deterministic below 2**64 (sympy BPSW beyond)"""
    return n >= 2 and bool(isprime(int(n)))


def p_adic_valuation(n: int, p: int) -> int:
    """Largest e with p**e dividing n (n != 0)"""
    if n == 0:
        raise DomainError("valuation of 0 is infinite")
    if p < 2:
        raise DomainError(f"valuation base must be >= 2, got {p}")
    return int(gmpy2.remove(mpz(n), mpz(p))[1])


def mod_pow(base: int, exponent: int, modulus: int) -> int:
    """base**exponent mod modulus, in [0, modulus)"""
    if modulus < 2:
        raise DomainError(f"modulus must be >= 2, got {modulus}")
    if exponent < 0:
        raise DomainError(f"exponent must be a natural number, got {exponent}")
    return int(gmpy2.powmod(mpz(base), mpz(exponent), mpz(modulus)))


def brute_force_order(modulus: int, base: int,
                      iteration_cap: int = DEFAULT_ORDER_ITERATION_CAP) -> int:
    """Least w >= 1 with base**w == 1 mod modulus by repeated multiplication"""
    modulus = mpz(modulus)
    base = mpz(base) % modulus
    x = base
    w = 1
    while x != 1:
        if w >= iteration_cap:
            raise IterationCapError(
                f"order of {base} mod {modulus} not found within {iteration_cap} steps", iteration_cap)
        x = x * base % modulus
        w += 1
    return w


def prime_power_order(prime: int, exponent: int, base: int,
                      iteration_cap: int = DEFAULT_ORDER_ITERATION_CAP) -> int:
    """
    Order of base modulo prime**exponent without touching the group size

    The order mod prime is found by search and then lifted one power at a time; each lift
    multiplies the order by 1 or by prime. Once a lift multiplies by prime at level j >= 1
    (j >= 2 when prime == 2), every later lift does too, so the rest is applied at once.
    """
    if exponent < 1:
        raise DomainError(f"prime power exponent must be >= 1, got {exponent}")
    p = mpz(prime)
    if base % p == 0:
        raise DomainError(f"{base} is not a unit modulo {prime}**{exponent}")

    order = mpz(brute_force_order(p, base, iteration_cap)) if p > 2 else mpz(1)
    stable_from = 2 if p == 2 else 1
    j = 1
    while j < exponent:
        if gmpy2.powmod(mpz(base), order, p ** (j + 1)) == 1:
            j += 1
            continue
        order *= p
        if j >= stable_from:
            order *= p ** (exponent - j - 1)
            break
        j += 1
    return int(order)


def _split_prime_power(modulus: int) -> Optional[Tuple[int, int]]:
    """(p, e) when modulus == p**e for a prime p, None otherwise"""
    m = mpz(modulus)
    p = mpz(2)
    while p <= SMALL_FACTOR_BOUND and p * p <= m:
        if m % p == 0:
            rest, e = gmpy2.remove(m, p)
            return (int(p), int(e)) if rest == 1 else None
        p = gmpy2.next_prime(p)
    if is_prime(m):
        return int(m), 1
    # no prime factor up to SMALL_FACTOR_BOUND, so any prime-power root is larger
    power = perfect_power(int(m))
    if power and is_prime(power[0]):
        return int(power[0]), int(power[1])
    return None


def multiplicative_order(modulus: int, base: int,
                         iteration_cap: int = DEFAULT_ORDER_ITERATION_CAP) -> int:
    """
    Least w >= 1 with base**w == 1 (mod modulus)

    Args:
        modulus: Natural number >= 2
        base: Integer coprime to modulus
        iteration_cap: Brute-force bound used only for composite non-prime-power moduli

    Returns:
        The multiplicative order as a Python int (can be very large for prime-power moduli)
    """
    if modulus < 2:
        raise DomainError(f"modulus must be >= 2, got {modulus}")
    if gmpy2.gcd(mpz(base), mpz(modulus)) != 1:
        raise DomainError(f"gcd({base}, {modulus}) != 1, no multiplicative order")

    split = _split_prime_power(modulus)
    if split is not None:
        return prime_power_order(split[0], split[1], base, iteration_cap)

    logger.debug("composite modulus %s: brute-force order with cap %d", modulus, iteration_cap)
    return brute_force_order(modulus, base, iteration_cap)


def compare_to_power(r: RationalLike, q: int, tau: RationalLike) -> Ordering:
    """
    Order r against q**(-tau) exactly

    With r = m/d and tau = a/b this compares m**b * q**a with d**b, so tau's denominator must
    stay small (<= MAX_TAU_DENOMINATOR) to bound bit growth.
    """
    r = to_rational(r)
    tau = to_rational(tau)
    if r <= 0:
        raise DomainError(f"r must be positive, got {r}")
    if q < 2:
        raise DomainError(f"q must be >= 2, got {q}")
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    a, b = tau.numerator, tau.denominator
    if b > MAX_TAU_DENOMINATOR:
        raise DomainError(f"tau denominator {b} exceeds the supported limit {MAX_TAU_DENOMINATOR}")

    left = r.numerator ** b * mpz(q) ** a
    right = r.denominator ** b
    if left < right:
        return Ordering.LESS
    if left > right:
        return Ordering.GREATER
    return Ordering.EQUAL


def compare_with_bound(r: RationalLike, q: int, tau: RationalLike,
                       scale: RationalLike = 1) -> Ordering:
    """Order r >= 0 against scale * q**(-tau) for any q >= 1 and scale > 0"""
    r = to_rational(r)
    scale = to_rational(scale)
    if r < 0:
        raise DomainError(f"r must be non-negative, got {r}")
    if scale <= 0:
        raise DomainError(f"scale must be positive, got {scale}")
    if r == 0:
        return Ordering.LESS
    scaled = r / scale
    if q == 1:
        if scaled < 1:
            return Ordering.LESS
        return Ordering.GREATER if scaled > 1 else Ordering.EQUAL
    return compare_to_power(scaled, q, tau)


def power_exceeds(q: int, exponent: RationalLike, bound: int) -> bool:
    """True iff q**exponent > bound, exactly (q >= 1, exponent = a/b > 0, bound >= 0)"""
    exponent = to_rational(exponent)
    if exponent <= 0:
        raise DomainError(f"exponent must be positive, got {exponent}")
    a, b = exponent.numerator, exponent.denominator
    return mpz(q) ** a > mpz(bound) ** b


def digit_count(n: int) -> int:
    """Exact number of decimal digits of |n| (1 for zero)"""
    n = abs(mpz(n))
    if n == 0:
        return 1
    k = gmpy2.num_digits(n, 10)
    return k - 1 if n < mpz(10) ** (k - 1) else k


def estimated_digits(prime: int, exponent: int, precision: int = 50) -> int:
    """floor(exponent * log10(prime)) + 1 without materialising prime**exponent"""
    exponent = mpz(exponent)
    if exponent.bit_length() < 4096:
        precision = max(precision, gmpy2.num_digits(exponent, 10) + 20)
    with mp.workdps(precision):
        return int(mp_floor(mpf(int(exponent)) * mp_log10(int(prime)))) + 1


def exceeds_digit_budget(prime: int, exponent: int, budget: int) -> bool:
    """True iff prime**exponent would have more than budget decimal digits"""
    exponent = mpz(exponent)
    if exponent.bit_length() > mpz(budget).bit_length() + 8:
        # exponent alone has more binary digits than the budget allows decimal ones
        return True
    return estimated_digits(prime, exponent) > budget


def least_power_exceeding(exponent: RationalLike, bound: int) -> int:
    """Least q >= 1 with q**exponent > bound, by doubling then bisection"""
    hi = 1
    while not power_exceeds(hi, exponent, bound):
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if power_exceeds(mid, exponent, bound):
            hi = mid
        else:
            lo = mid
    return hi
