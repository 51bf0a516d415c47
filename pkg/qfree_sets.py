"""
Denominator sets defined by divisibility
Membership, the N*\\Q-free fixed-point check, support, exponent of convergence and Euler-product partial sums
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Any, FrozenSet, List, Optional, Sequence, Tuple, Union

import gmpy2
import numpy as np
from gmpy2 import mpq
from mpmath import mp, mpf, nstr, fsum
from sympy import primerange, primefactors, factorint

from exact_kernel import ExactRational, RationalLike, to_rational, is_prime
from lab_errors import DomainError, UndefinedFitError

logger = logging.getLogger(__name__)

SPEC_GRAMMAR = "kfree:k | coprime:m | bfree:b1,b2,... | smooth:p1,p2,... | all | table:@file"

DEFAULT_SUPPORT_SCAN_BOUND = 10 ** 6


class FreeSetSpec:
    """
    Declarative description of a denominator set Q

    Subclasses supply the membership rule, a sieve over [1, N] and what is known about the
    support. Every variant contains 1.
    """

    literal: str = ""

    def member(self, q: int) -> bool:
        raise NotImplementedError

    def sieve(self, limit: int) -> np.ndarray:
        """Boolean table t with t[q] == member(q) for 1 <= q <= limit (t[0] is False)"""
        table = np.zeros(limit + 1, dtype=bool)
        for q in range(1, limit + 1):
            table[q] = self.member(q)
        return table

    def support_rule(self, prime: int, scan_bound: int) -> Optional[bool]:
        """True/False when the prime is known to be in/out of the support, None if undecided"""
        return self.member(prime)

    def finite_support(self) -> Optional[bool]:
        """Whether the support is finite; None when the rule gives no exact answer"""
        return None

    def cofinite_support(self) -> bool:
        """Whether the support holds all but finitely many primes"""
        return False

    def __str__(self) -> str:
        return self.literal


@dataclass(frozen=True)
class KFree(FreeSetSpec):
    """q with no k-th power divisor > 1"""
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise DomainError(f"kfree needs k >= 2, got {self.k}")

    @property
    def literal(self) -> str:
        return f"kfree:{self.k}"

    def member(self, q: int) -> bool:
        _check_q(q)
        return all(e < self.k for e in factorint(q).values())

    def sieve(self, limit: int) -> np.ndarray:
        table = np.ones(limit + 1, dtype=bool)
        table[0] = False
        root = int(gmpy2.iroot(gmpy2.mpz(limit), self.k)[0]) if limit >= 1 else 0
        for p in primerange(2, root + 1):
            step = p ** self.k
            table[step::step] = False
        return table

    def support_rule(self, prime: int, scan_bound: int) -> Optional[bool]:
        return True

    def finite_support(self) -> Optional[bool]:
        return False

    def cofinite_support(self) -> bool:
        return True


@dataclass(frozen=True)
class CoprimeTo(FreeSetSpec):
    """q with gcd(q, m) = 1"""
    m: int

    def __post_init__(self):
        if self.m < 2:
            raise DomainError(f"coprime needs m >= 2, got {self.m}")

    @property
    def literal(self) -> str:
        return f"coprime:{self.m}"

    def member(self, q: int) -> bool:
        _check_q(q)
        return gmpy2.gcd(q, self.m) == 1

    def sieve(self, limit: int) -> np.ndarray:
        table = np.ones(limit + 1, dtype=bool)
        table[0] = False
        for p in primefactors(self.m):
            table[p::p] = False
        return table

    def support_rule(self, prime: int, scan_bound: int) -> Optional[bool]:
        return self.m % prime != 0

    def finite_support(self) -> Optional[bool]:
        return False

    def cofinite_support(self) -> bool:
        return True


@dataclass(frozen=True)
class BFree(FreeSetSpec):
    """q divisible by no element of the finite set B"""
    B: Tuple[int, ...]

    def __post_init__(self):
        if not self.B:
            raise DomainError("bfree needs a non-empty set B")
        if any(b < 2 for b in self.B):
            raise DomainError(f"bfree elements must be >= 2, got {sorted(self.B)}")
        object.__setattr__(self, "B", tuple(sorted(set(self.B))))

    @property
    def literal(self) -> str:
        return "bfree:" + ",".join(str(b) for b in self.B)

    def member(self, q: int) -> bool:
        _check_q(q)
        return all(q % b for b in self.B)

    def sieve(self, limit: int) -> np.ndarray:
        table = np.ones(limit + 1, dtype=bool)
        table[0] = False
        for b in self.B:
            table[b::b] = False
        return table

    def support_rule(self, prime: int, scan_bound: int) -> Optional[bool]:
        # every multiple of prime is excluded as soon as some b divides prime
        if any(prime % b == 0 for b in self.B):
            return False
        for multiple in range(prime, scan_bound + 1, prime):
            if self.member(multiple):
                return True
        return None

    def finite_support(self) -> Optional[bool]:
        return False

    def cofinite_support(self) -> bool:
        # only primes that belong to B can leave the support
        return True


@dataclass(frozen=True)
class Smooth(FreeSetSpec):
    """q whose prime factors all lie in a finite set of primes"""
    primes: Tuple[int, ...]

    def __post_init__(self):
        if not self.primes or not all(is_prime(p) for p in self.primes):
            raise DomainError(f"smooth needs a non-empty set of primes, got {list(self.primes)}")
        object.__setattr__(self, "primes", tuple(sorted(set(self.primes))))

    @property
    def literal(self) -> str:
        return "smooth:" + ",".join(str(p) for p in self.primes)

    def member(self, q: int) -> bool:
        _check_q(q)
        return _is_smooth(q, self.primes)

    def sieve(self, limit: int) -> np.ndarray:
        table = np.zeros(limit + 1, dtype=bool)
        for q in _smooth_numbers(self.primes, limit):
            table[q] = True
        return table

    def support_rule(self, prime: int, scan_bound: int) -> Optional[bool]:
        return prime in self.primes

    def finite_support(self) -> Optional[bool]:
        return True


@dataclass(frozen=True)
class AllIntegers(FreeSetSpec):
    """Every positive integer"""

    @property
    def literal(self) -> str:
        return "all"

    def member(self, q: int) -> bool:
        _check_q(q)
        return True

    def sieve(self, limit: int) -> np.ndarray:
        table = np.ones(limit + 1, dtype=bool)
        table[0] = False
        return table

    def support_rule(self, prime: int, scan_bound: int) -> Optional[bool]:
        return True

    def finite_support(self) -> Optional[bool]:
        return False

    def cofinite_support(self) -> bool:
        return True


@dataclass(frozen=True)
class ExplicitTable(FreeSetSpec):
    """
    Bitmap of members on [1, N] with an optional rule for q > N

    tail is None (queries past N are errors), "empty" (no members past N) or "smooth"
    (members past N are exactly the tail_primes-smooth numbers).
    """
    limit: int
    members: FrozenSet[int]
    tail: Optional[str] = None
    tail_primes: Tuple[int, ...] = ()
    source: str = ""

    def __post_init__(self):
        if self.limit < 1:
            raise DomainError(f"table limit must be >= 1, got {self.limit}")
        if 1 not in self.members:
            raise DomainError("a N*\\Q-free set must contain 1; table rejected")
        outside = [q for q in self.members if not 1 <= q <= self.limit]
        if outside:
            raise DomainError(f"table members outside [1, {self.limit}]: {sorted(outside)[:5]}")
        if self.tail not in (None, "empty", "smooth"):
            raise DomainError(f"unknown tail rule {self.tail!r}; use empty or smooth")
        if self.tail == "smooth" and not all(is_prime(p) for p in self.tail_primes):
            raise DomainError(f"smooth tail needs primes, got {list(self.tail_primes)}")

    @property
    def literal(self) -> str:
        return f"table:@{self.source}" if self.source else f"table:{self.limit}"

    def member(self, q: int) -> bool:
        _check_q(q)
        if q <= self.limit:
            return q in self.members
        if self.tail is None:
            raise DomainError(f"table covers [1, {self.limit}] and has no tail rule; q={q} is undefined")
        if self.tail == "empty":
            return False
        return _is_smooth(q, self.tail_primes)

    def sieve(self, limit: int) -> np.ndarray:
        if limit > self.limit and self.tail is None:
            raise DomainError(f"table covers [1, {self.limit}] and has no tail rule; cannot sieve to {limit}")
        table = np.zeros(limit + 1, dtype=bool)
        for q in self.members:
            if q <= limit:
                table[q] = True
        if limit > self.limit and self.tail == "smooth":
            for q in _smooth_numbers(self.tail_primes, limit):
                if q > self.limit:
                    table[q] = True
        return table

    def support_rule(self, prime: int, scan_bound: int) -> Optional[bool]:
        if self.tail == "smooth" and prime in self.tail_primes:
            return True
        for multiple in range(prime, min(scan_bound, self.limit) + 1, prime):
            if multiple in self.members:
                return True
        if self.tail is not None and scan_bound >= self.limit:
            return False
        return None

    def finite_support(self) -> Optional[bool]:
        return True if self.tail is not None else None

    @classmethod
    def from_json(cls, data: Dict[str, Any], source: str = "") -> "ExplicitTable":
        tail = data.get("tail")
        return cls(
            limit=int(data["N"]),
            members=frozenset(int(q) for q in data["members"]),
            tail=tail["rule"] if tail else None,
            tail_primes=tuple(int(p) for p in (tail or {}).get("primes", ())),
            source=source,
        )


def _check_q(q: int):
    if q < 1:
        raise DomainError(f"membership is defined for q >= 1, got {q}")


def _is_smooth(q: int, primes: Sequence[int]) -> bool:
    q = gmpy2.mpz(q)
    for p in primes:
        q = gmpy2.remove(q, p)[0] if q > 1 else q
    return q == 1


def _smooth_numbers(primes: Sequence[int], limit: int) -> List[int]:
    numbers = [1] if limit >= 1 else []
    for p in primes:
        extended = []
        for n in numbers:
            while n <= limit:
                extended.append(n)
                n *= p
        numbers = extended
    return sorted(numbers)


def parse_spec(literal: str) -> FreeSetSpec:
    """Read a CLI spec literal such as kfree:2, coprime:6, bfree:4,9,25 or table:@file.json"""
    text = literal.strip()
    kind, _, arg = text.partition(":")
    try:
        if kind == "all" and not arg:
            return AllIntegers()
        if kind == "kfree":
            return KFree(int(arg))
        if kind == "coprime":
            return CoprimeTo(int(arg))
        if kind == "bfree":
            return BFree(tuple(int(b) for b in arg.split(",")))
        if kind == "smooth":
            return Smooth(tuple(int(p) for p in arg.split(",")))
        if kind == "table" and arg.startswith("@"):
            path = Path(arg[1:])
            with open(path, "r", encoding="utf-8") as f:
                return ExplicitTable.from_json(json.load(f), source=str(path))
    except (ValueError, KeyError, TypeError, OSError) as e:
        raise DomainError(f"malformed spec {literal!r} ({e}); expected {SPEC_GRAMMAR}")
    raise DomainError(f"malformed spec {literal!r}; expected {SPEC_GRAMMAR}")


def member(spec: FreeSetSpec, q: int) -> bool:
    return spec.member(q)


def member_table(spec: FreeSetSpec, N: int) -> np.ndarray:
    """Boolean table t with t[q] == member(spec, q) for 1 <= q <= N; t[0] is False"""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    return spec.sieve(N)


def members_up_to(spec: FreeSetSpec, limit: int) -> np.ndarray:
    """Sorted members of Q in [1, limit]"""
    return np.flatnonzero(member_table(spec, limit))


@dataclass
class FreePropertyReport:
    spec: str
    N: int
    violations: List[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> Dict[str, Any]:
        return {"spec": self.spec, "N": str(self.N), "violations": [str(q) for q in self.violations]}


def verify_free_property(spec: FreeSetSpec, N: int) -> FreePropertyReport:
    """
    Check (q in Q) <=> (no non-member v divides q) for every q <= N

    Args:
        spec: Set under test
        N: Upper end of the checked range

    Returns:
        Report listing every violating q
    """
    table = member_table(spec, N)
    has_outside_divisor = np.zeros(N + 1, dtype=bool)
    for v in np.flatnonzero(~table[1:]) + 1:
        has_outside_divisor[v::v] = True

    bad = np.flatnonzero(table[1:] == has_outside_divisor[1:]) + 1
    report = FreePropertyReport(spec=str(spec), N=N, violations=[int(q) for q in bad])
    logger.info("verify_free_property %s up to %d: %d violations", spec, N, len(report.violations))
    return report


@dataclass
class SupportReport:
    spec: str
    P: int
    primes: List[int]
    inconclusive: List[int] = field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        return {"spec": self.spec, "P": str(self.P), "primes": [str(p) for p in self.primes],
                "inconclusive": [str(p) for p in self.inconclusive]}


def support_primes(spec: FreeSetSpec, P: int,
                   scan_bound: int = DEFAULT_SUPPORT_SCAN_BOUND) -> SupportReport:
    """Primes <= P dividing some member of Q, with undecided primes listed separately"""
    if P < 2:
        raise DomainError(f"P must be >= 2, got {P}")
    inside, undecided = [], []
    for prime in primerange(2, P + 1):
        verdict = spec.support_rule(int(prime), scan_bound)
        if verdict is None:
            undecided.append(int(prime))
        elif verdict:
            inside.append(int(prime))
    return SupportReport(spec=str(spec), P=P, primes=inside, inconclusive=undecided)


@dataclass
class ConvergenceExponent:
    value: Optional[Union[ExactRational, float]]
    method: str
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {"value": None if self.value is None else str(self.value), "method": self.method,
                "diagnostics": self.diagnostics}


def convergence_exponent(spec: FreeSetSpec) -> ConvergenceExponent:
    """
    Exact nu(Q) from the support: 0 for finite support, 1 for a cofinite set of primes

    Anything else comes back with method "unknown-exact" and value None.
    """
    if spec.finite_support():
        return ConvergenceExponent(mpq(0), "exact-by-support", {"support": "finite"})
    if spec.cofinite_support():
        return ConvergenceExponent(mpq(1), "exact-by-support", {"support": "cofinite"})
    return ConvergenceExponent(None, "unknown-exact",
                               {"hint": "support not recognised; use counting_exponent_fit"})


MembershipOracle = Union[FreeSetSpec, Callable[[int], bool]]


def _cumulative_counts(oracle: MembershipOracle, grid: Sequence[int]) -> List[int]:
    top = grid[-1]
    if isinstance(oracle, FreeSetSpec):
        flags = oracle.sieve(top)
    else:
        flags = np.zeros(top + 1, dtype=bool)
        for q in range(1, top + 1):
            flags[q] = bool(oracle(q))
    running = np.cumsum(flags)
    return [int(running[n]) for n in grid]


def counting_exponent_fit(oracle: MembershipOracle, grid: Sequence[int]) -> ConvergenceExponent:
    """
    Least-squares slope of log #(Q ∩ [1, N]) against log N

    This estimates the counting exponent, an upper bound for nu(Q) that typically equals it;
    slowly growing sets such as powers of 2 make the estimate meaningless at desk scale.
    """
    grid = [int(n) for n in grid]
    if len(grid) < 3:
        raise DomainError(f"need at least 3 grid points, got {len(grid)}")
    if grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError(f"grid must be strictly increasing naturals, got {grid}")

    counts = _cumulative_counts(oracle, grid)
    if counts[-1] == 0:
        raise UndefinedFitError(f"no members in [1, {grid[-1]}]")
    if counts[-1] <= 1:
        raise UndefinedFitError(f"only {counts[-1]} member in [1, {grid[-1]}]; slope is undefined")
    if counts[0] == 0:
        raise UndefinedFitError(f"no members in [1, {grid[0]}]; log count undefined at the first grid point")

    x = np.log(np.array(grid, dtype=float))
    y = np.log(np.array(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return ConvergenceExponent(
        value=float(slope),
        method="counting-fit",
        diagnostics={"grid": grid, "counts": counts, "intercept": float(intercept),
                     "residuals": [float(r) for r in residuals]},
    )


@dataclass
class EulerProductReport:
    spec: str
    nu: ExactRational
    P: int
    precision: int
    left_sum: mpf
    q_partial_sum: mpf
    right_product: mpf

    @property
    def left_holds(self) -> bool:
        return self.left_sum <= self.q_partial_sum

    @property
    def right_holds(self) -> bool:
        return self.q_partial_sum <= self.right_product

    def to_json(self) -> Dict[str, Any]:
        return {
            "spec": self.spec, "nu": str(self.nu), "P": str(self.P), "precision": self.precision,
            "left_sum": nstr(self.left_sum, self.precision),
            "q_partial_sum": nstr(self.q_partial_sum, self.precision),
            "right_product": nstr(self.right_product, self.precision),
            "left_holds": self.left_holds, "right_holds": self.right_holds,
        }


def euler_product_partial(spec: FreeSetSpec, nu: RationalLike, P: int,
                          precision: int = 50) -> EulerProductReport:
    """
    Partial quantities of sum over Supp(Q) <= sum over Q <= Euler product over Supp(Q)

    Returns:
        The prime sum, the member sum and the product, each truncated at P and evaluated
        with `precision` significant decimal digits
    """
    nu = to_rational(nu)
    if nu <= 0:
        raise DomainError(f"nu must be positive, got {nu}")
    if P < 2:
        raise DomainError(f"P must be >= 2, got {P}")

    support = support_primes(spec, P, scan_bound=P).primes
    members = members_up_to(spec, P)
    with mp.workdps(precision + 10):
        exponent = mpf(int(nu.numerator)) / int(nu.denominator)
        left = fsum(mpf(int(p)) ** -exponent for p in support)
        middle = fsum(mpf(int(q)) ** -exponent for q in members)
        right = mpf(1)
        for p in support:
            right *= 1 + 1 / (mpf(int(p)) ** exponent - 1)
    return EulerProductReport(spec=str(spec), nu=nu, P=P, precision=precision,
                              left_sum=left, q_partial_sum=middle, right_product=right)
