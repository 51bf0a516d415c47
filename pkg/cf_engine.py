"""
Continued-fraction engine
Convergents by the classical recurrences, exact error brackets, enclosures and the Legendre filter
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple, Sequence, Dict, Any, Iterable, Optional

import gmpy2
from gmpy2 import mpz, mpq

from exact_kernel import ExactRational, Ordering, to_rational, compare_with_bound, RationalLike
from lab_errors import DomainError, RangeError

logger = logging.getLogger(__name__)


class Verdict(Enum):
    """Three-valued answer about the limit x of a stored prefix"""
    PROVEN = "proven"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ContinuedFraction:
    """
    Finite prefix [a0; a1, ..., aS] with cached convergents p_s/q_s for s = -1..S

    terminal marks a complete expansion, in which case x equals p_S/q_S; otherwise x is any
    number whose expansion starts with the stored quotients.
    """
    a0: int
    quotients: Tuple[int, ...]
    p: Tuple[int, ...] = field(repr=False)
    q: Tuple[int, ...] = field(repr=False)
    terminal: bool = False

    @property
    def depth(self) -> int:
        """S, the index of the last stored quotient"""
        return len(self.quotients)

    def quotient(self, s: int) -> int:
        if s == 0:
            return self.a0
        if not 1 <= s <= self.depth:
            raise RangeError(f"quotient index {s} outside 0..{self.depth}")
        return self.quotients[s - 1]

    def convergent(self, s: int) -> Tuple[int, int]:
        """(p_s, q_s) for -1 <= s <= S"""
        if not -1 <= s <= self.depth:
            raise RangeError(f"convergent index {s} outside -1..{self.depth}")
        return self.p[s + 1], self.q[s + 1]

    def convergent_value(self, s: int) -> ExactRational:
        p_s, q_s = self.convergent(s)
        return mpq(p_s, q_s)

    @property
    def numerators(self) -> List[int]:
        return list(self.p[1:])

    @property
    def denominators(self) -> List[int]:
        return list(self.q[1:])

    def value(self) -> ExactRational:
        """Exact value of a terminal expansion"""
        if not self.terminal:
            raise DomainError("a non-terminal prefix has no exact value; use enclosure()")
        return self.convergent_value(self.depth)

    def to_json(self) -> Dict[str, Any]:
        return {
            "a0": str(self.a0),
            "quotients": [str(a) for a in self.quotients],
            "convergents": [[str(p_s), str(q_s)] for p_s, q_s in zip(self.p[1:], self.q[1:])],
            "terminal": self.terminal,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ContinuedFraction":
        cf = convergents_from_quotients(mpz(data["a0"]), [mpz(a) for a in data["quotients"]],
                                        terminal=bool(data.get("terminal", False)))
        stored = data.get("convergents")
        if stored is not None:
            replay = [[str(p_s), str(q_s)] for p_s, q_s in zip(cf.p[1:], cf.q[1:])]
            if [[str(x) for x in pair] for pair in stored] != replay:
                raise DomainError("stored convergents do not match the quotients")
        return cf


def convergents_from_quotients(a0: int, quotients: Sequence[int],
                               terminal: bool = False) -> ContinuedFraction:
    """
    Run p_s = a_s p_{s-1} + p_{s-2}, q_s = a_s q_{s-1} + q_{s-2} from p_{-1}=1, q_{-1}=0

    Args:
        a0: Integer part
        quotients: Partial quotients a_1..a_S, each >= 1
        terminal: True if the expansion is complete (x is the last convergent)

    Returns:
        ContinuedFraction with every convergent cached
    """
    for s, a in enumerate(quotients, 1):
        if a < 1:
            raise DomainError(f"partial quotient a_{s} = {a} must be >= 1")

    p = [mpz(1), mpz(a0)]
    q = [mpz(0), mpz(1)]
    for a in quotients:
        a = mpz(a)
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])

    return ContinuedFraction(
        a0=int(a0),
        quotients=tuple(mpz(a) for a in quotients),
        p=tuple(p),
        q=tuple(q),
        terminal=terminal,
    )


def canonical_quotients(a0: int, quotients: Sequence[int]) -> Tuple[int, List[int]]:
    """Collapse a trailing quotient 1 into its predecessor so expansions are unique"""
    quotients = list(quotients)
    if quotients and quotients[-1] == 1:
        quotients.pop()
        if quotients:
            quotients[-1] += 1
        else:
            a0 += 1
    return a0, quotients


def quotients_of_rational(r: RationalLike) -> Tuple[int, List[int]]:
    """Euclidean expansion of r; the last quotient is >= 2 unless the expansion is empty"""
    r = to_rational(r)
    num, den = mpz(r.numerator), mpz(r.denominator)
    a0 = num // den
    num -= a0 * den
    quotients = []
    while num != 0:
        num, den = den, num
        a = num // den
        quotients.append(a)
        num -= a * den
    return canonical_quotients(int(a0), quotients)


def cf_of_rational(r: RationalLike) -> ContinuedFraction:
    """Terminal ContinuedFraction whose value is exactly r"""
    a0, quotients = quotients_of_rational(r)
    return convergents_from_quotients(a0, quotients, terminal=True)


def evaluate_quotients(quotients: Sequence[int]) -> ExactRational:
    """Value of the finite expansion [b0; b1, ..., bm]"""
    if not quotients:
        raise DomainError("empty expansion has no value")
    value = mpq(quotients[-1])
    for b in reversed(quotients[:-1]):
        value = b + 1 / value
    return value


def complete_quotient_bounds(cf: ContinuedFraction, k: int, depth: int) -> Tuple[ExactRational, ExactRational]:
    """
    Open interval holding the complete quotient alpha_k = [a_k; a_{k+1}, ...]

    Uses a_k..a_{k+depth}; any continuation has its next complete quotient in (1, inf), so
    alpha_k lies strictly between [a_k; ..., a_{k+depth}] and [a_k; ..., a_{k+depth} + 1].
    """
    if k < 1 or depth < 0:
        raise DomainError(f"need k >= 1 and depth >= 0, got k={k}, depth={depth}")
    if k + depth > cf.depth:
        raise RangeError(f"complete quotient alpha_{k} at depth {depth} needs a_{k + depth}, "
                         f"prefix stops at a_{cf.depth}")
    head = [cf.quotient(i) for i in range(k, k + depth + 1)]
    at_infinity = evaluate_quotients(head)
    at_one = evaluate_quotients(head[:-1] + [head[-1] + 1])
    return (at_infinity, at_one) if at_infinity < at_one else (at_one, at_infinity)


def _distance_for(cf: ContinuedFraction, s: int, alpha: ExactRational) -> ExactRational:
    p_s, q_s = cf.convergent(s)
    _, q_prev = cf.convergent(s - 1)
    return 1 / (q_s * (alpha * q_s + q_prev))


def error_bracket(cf: ContinuedFraction, s: int, depth: int = 0) -> Tuple[ExactRational, ExactRational]:
    """
    Bounds lo < |x - p_s/q_s| < hi valid for every continuation past a_{s+depth+1}

    depth = 0 gives the classical 1/(q_s(q_s+q_{s+1})) < |x - p_s/q_s| < 1/(q_s q_{s+1});
    each extra level of depth nests the bracket inside the previous one. For a terminal
    expansion whose quotients are exhausted the bracket collapses to the exact distance.
    """
    if s < 0:
        raise RangeError(f"bracket index must be >= 0, got {s}")
    if s + depth + 1 > cf.depth:
        raise RangeError(f"bracket at s={s}, depth={depth} needs a_{s + depth + 1}, "
                         f"prefix stops at a_{cf.depth}")

    if cf.terminal and s + depth + 1 == cf.depth:
        alpha = evaluate_quotients([cf.quotient(i) for i in range(s + 1, cf.depth + 1)])
        exact = _distance_for(cf, s, alpha)
        return exact, exact

    alpha_lo, alpha_hi = complete_quotient_bounds(cf, s + 1, depth)
    return _distance_for(cf, s, alpha_hi), _distance_for(cf, s, alpha_lo)


def convergent_verdict(cf: ContinuedFraction, s: int, tau: RationalLike,
                       scale: RationalLike = 1, max_depth: Optional[int] = None) -> Tuple[Verdict, int]:
    """
    Decide |x - p_s/q_s| < scale * q_s**(-tau), escalating bracket depth until conclusive

    Returns:
        (verdict, depth used); INCONCLUSIVE when the stored prefix runs out
    """
    available = cf.depth - s - 1
    if available < 0:
        return Verdict.INCONCLUSIVE, -1
    if max_depth is not None:
        available = min(available, max_depth)
    _, q_s = cf.convergent(s)
    for depth in range(available + 1):
        lo, hi = error_bracket(cf, s, depth)
        upper = compare_with_bound(hi, q_s, tau, scale)
        # hi is attained only when the bracket collapsed to an exact distance
        if upper == Ordering.LESS or (upper == Ordering.EQUAL and lo != hi):
            return Verdict.PROVEN, depth
        if compare_with_bound(lo, q_s, tau, scale) in (Ordering.GREATER, Ordering.EQUAL):
            return Verdict.REFUTED, depth
        logger.debug("s=%d inconclusive at depth %d, escalating", s, depth)
    return Verdict.INCONCLUSIVE, available


@dataclass(frozen=True)
class Enclosure:
    """
    Presentation of a real number: exactly lo when exact, otherwise strictly inside (lo, hi)
    """
    lo: ExactRational
    hi: ExactRational
    exact: bool = False

    @classmethod
    def point(cls, value: RationalLike) -> "Enclosure":
        value = to_rational(value)
        return cls(value, value, True)

    @property
    def width(self) -> ExactRational:
        return self.hi - self.lo

    @property
    def midpoint(self) -> ExactRational:
        return (self.lo + self.hi) / 2

    def coarsen(self, bits: int) -> "Enclosure":
        """Closed dyadic interval [floor(lo 2^bits), ceil(hi 2^bits)] / 2^bits containing this one"""
        if self.exact and self.lo.denominator.bit_length() <= bits:
            return self
        scale = mpz(1) << bits
        lo = mpq(gmpy2.f_div(self.lo.numerator * scale, self.lo.denominator), scale)
        hi = mpq(gmpy2.c_div(self.hi.numerator * scale, self.hi.denominator), scale)
        return Enclosure(lo, hi, False)

    def distance_bounds(self, r: RationalLike) -> Tuple[ExactRational, ExactRational]:
        """(inf, sup) of |x - r|; for an open enclosure neither bound is attained except inf = 0"""
        r = to_rational(r)
        if self.exact:
            d = abs(self.lo - r)
            return d, d
        if r <= self.lo:
            return self.lo - r, self.hi - r
        if r >= self.hi:
            return r - self.hi, r - self.lo
        return mpq(0), max(r - self.lo, self.hi - r)

    def below(self, r: RationalLike, q: int, tau: RationalLike, scale: RationalLike = 1) -> Verdict:
        """Three-valued |x - r| < scale * q**(-tau)"""
        inf, sup = self.distance_bounds(r)
        upper = compare_with_bound(sup, q, tau, scale)
        if upper == Ordering.LESS or (upper == Ordering.EQUAL and not self.exact):
            return Verdict.PROVEN
        if compare_with_bound(inf, q, tau, scale) in (Ordering.GREATER, Ordering.EQUAL):
            return Verdict.REFUTED
        return Verdict.INCONCLUSIVE

    def below_rational(self, r: RationalLike, bound: RationalLike) -> Verdict:
        """Three-valued |x - r| < bound for a rational bound"""
        bound = to_rational(bound)
        inf, sup = self.distance_bounds(r)
        if sup < bound or (sup == bound and not self.exact):
            return Verdict.PROVEN
        if inf >= bound:
            return Verdict.REFUTED
        return Verdict.INCONCLUSIVE


def combine(terms: Iterable[Tuple[RationalLike, Enclosure]], constant: RationalLike = 0) -> Enclosure:
    """Enclosure of constant + sum(c_i * x_i) by interval arithmetic on exact endpoints"""
    lo = hi = to_rational(constant)
    exact = True
    for coef, x in terms:
        coef = to_rational(coef)
        if coef == 0:
            continue
        if coef > 0:
            lo += coef * x.lo
            hi += coef * x.hi
        else:
            lo += coef * x.hi
            hi += coef * x.lo
        exact = exact and x.exact
    return Enclosure(lo, hi, exact)


def enclosure(cf: ContinuedFraction) -> Enclosure:
    """x lies strictly between p_S/q_S and (p_S + p_{S-1})/(q_S + q_{S-1}) for any continuation"""
    if cf.terminal:
        return Enclosure.point(cf.value())
    p_s, q_s = cf.convergent(cf.depth)
    p_prev, q_prev = cf.convergent(cf.depth - 1)
    a = mpq(p_s, q_s)
    b = mpq(p_s + p_prev, q_s + q_prev)
    return Enclosure(min(a, b), max(a, b), False)


@dataclass(frozen=True)
class LegendreEntry:
    p: int
    q: int
    verdict: Verdict
    is_convergent: bool

    def to_json(self) -> Dict[str, Any]:
        return {"p": str(self.p), "q": str(self.q), "proof": self.verdict.value,
                "is_convergent": self.is_convergent}


def legendre_filter(cf: ContinuedFraction, q_max: int) -> List[LegendreEntry]:
    """
    Every reduced p/q with q <= q_max and |x - p/q| < 1/(2q^2), flagged by convergent membership

    Entries that the stored prefix cannot decide are kept with an INCONCLUSIVE verdict;
    fractions proven to miss the bound are omitted.
    """
    if q_max < 1:
        raise DomainError(f"q_max must be >= 1, got {q_max}")
    box = enclosure(cf)
    convergents = {(int(p_s), int(q_s)) for p_s, q_s in zip(cf.p[1:], cf.q[1:])}

    entries = []
    for q in range(1, q_max + 1):
        bound = mpq(1, 2 * q * q)
        first = int(box.lo.numerator * q // box.lo.denominator) - 1
        last = int(-(-box.hi.numerator * q // box.hi.denominator)) + 1
        for p in range(first, last + 1):
            if gmpy2.gcd(p, q) != 1:
                continue
            verdict = box.below_rational(mpq(p, q), bound)
            if verdict == Verdict.REFUTED:
                continue
            entries.append(LegendreEntry(p, q, verdict, (p, q) in convergents))

    inconclusive = sum(1 for e in entries if e.verdict == Verdict.INCONCLUSIVE)
    if inconclusive:
        logger.info("legendre_filter: %d entries inconclusive at prefix depth %d", inconclusive, cf.depth)
    return entries
