"""
Prime-pair Liouville construction
Builds continued fractions whose even convergent denominators are powers of pi0 and odd ones powers of pi1
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Dict, Any, Optional, Sequence, Tuple, Union

import gmpy2
from gmpy2 import mpz
from mpmath import mp, mpf, log as mp_log

from cf_engine import (ContinuedFraction, Enclosure, Verdict, convergents_from_quotients,
                       convergent_verdict, enclosure)
from exact_kernel import (DEFAULT_ORDER_ITERATION_CAP, ExactRational, RationalLike, digit_count,
                          exceeds_digit_budget, is_prime, least_power_exceeding, prime_power_order, to_rational)
from lab_errors import ConsistencyError, DomainError

logger = logging.getLogger(__name__)

ACTIVE = "active"
GROWTH_EXCEEDED = "growth-exceeded"

DEFAULT_DIGIT_BUDGET = 10 ** 6


@dataclass(frozen=True)
class PrimePairConstruction:
    """
    State of the construction: q_{2s} = pi0**alpha_{2s}, q_{2s+1} = pi1**alpha_{2s+1}

    Index t of alpha, a, q and p is the convergent index; k_choices[j] and omegas[j] belong
    to index j + 2. a[0] is fixed to 0, so p starts 0, 1, ...
    """
    pi0: int
    pi1: int
    alpha: Tuple[int, ...]
    a: Tuple[int, ...] = field(repr=False)
    q: Tuple[int, ...] = field(repr=False)
    p: Tuple[int, ...] = field(repr=False)
    k_choices: Tuple[int, ...] = ()
    omegas: Tuple[int, ...] = field(default=(), repr=False)
    status: str = ACTIVE
    digit_budget: int = DEFAULT_DIGIT_BUDGET
    stop_reason: str = ""
    order_iteration_cap: int = field(default=DEFAULT_ORDER_ITERATION_CAP, repr=False)

    @property
    def depth(self) -> int:
        """Index of the last built term"""
        return len(self.q) - 1

    def prime(self, t: int) -> int:
        """The prime whose power is q_t"""
        return self.pi0 if t % 2 == 0 else self.pi1

    def continued_fraction(self) -> ContinuedFraction:
        return convergents_from_quotients(0, self.a[1:])

    def x_enclosure(self) -> Enclosure:
        """Open interval holding the number for every continuation of the built prefix"""
        return enclosure(self.continued_fraction())


def init(pi0: int, pi1: int, alpha1: int = 1, digit_budget: int = DEFAULT_DIGIT_BUDGET,
         order_iteration_cap: int = DEFAULT_ORDER_ITERATION_CAP) -> PrimePairConstruction:
    """
    Start the construction with q_0 = 1 and q_1 = a_1 = pi1**alpha1

    Args:
        pi0: Prime carried by even-indexed denominators
        pi1: Prime carried by odd-indexed denominators, distinct from pi0
        alpha1: Exponent of q_1, >= 1
        digit_budget: Largest number of decimal digits any q_t may reach
        order_iteration_cap: Step bound for brute-force order searches modulo a large prime
    """
    if not is_prime(pi0) or not is_prime(pi1):
        raise DomainError(f"both arguments must be prime, got {pi0} and {pi1}")
    if pi0 == pi1:
        raise DomainError(f"the two primes must be distinct, got {pi0} twice")
    if alpha1 < 1:
        raise DomainError(f"alpha1 must be >= 1, got {alpha1}")
    if exceeds_digit_budget(pi1, alpha1, digit_budget):
        raise DomainError(f"q_1 = {pi1}**{alpha1} already exceeds the digit budget {digit_budget}")

    q1 = mpz(pi1) ** alpha1
    return PrimePairConstruction(
        pi0=pi0, pi1=pi1,
        alpha=(0, alpha1),
        a=(0, q1),
        q=(mpz(1), q1),
        p=(mpz(0), mpz(1)),
        digit_budget=digit_budget,
        order_iteration_cap=order_iteration_cap,
    )


def next_alpha(c: PrimePairConstruction, k: Optional[int] = None) -> Tuple[int, int, int]:
    """
    (alpha_t, k, omega) for the next index t = 2s + i

    omega is the order of pi_i modulo pi_{1-i}**alpha_{t-1}; this is what makes
    pi_i**(alpha_t - alpha_{t-2}) == 1 mod q_{t-1}, hence a_t integral.
    """
    t = len(c.q)
    own, other = c.prime(t), c.prime(t - 1)
    omega = prime_power_order(other, c.alpha[t - 1], own, c.order_iteration_cap)
    gap = c.alpha[t - 1] - c.alpha[t - 2]
    minimal = max(1, gap // omega + 1)
    if k is None:
        k = minimal
    elif k < minimal:
        raise DomainError(f"k={k} gives alpha_{t} <= alpha_{t - 1}; the smallest admissible k is {minimal}")
    return c.alpha[t - 2] + k * omega, k, omega


def extend(c: PrimePairConstruction, k: Optional[int] = None) -> PrimePairConstruction:
    """
    Append the next term, or flip the status to growth-exceeded when q_t breaks the digit budget

    Args:
        c: Active construction
        k: Multiplier of the order; None picks the least k with alpha_t > alpha_{t-1}

    Returns:
        A new construction value; c itself is unchanged
    """
    if c.status != ACTIVE:
        raise DomainError(f"construction is {c.status}; it cannot be extended")
    t = len(c.q)
    own = c.prime(t)
    alpha_t, k, omega = next_alpha(c, k)

    if exceeds_digit_budget(own, alpha_t, c.digit_budget):
        logger.info("q_%d = %d**alpha exceeds %d digits; stopping", t, own, c.digit_budget)
        return replace(c, status=GROWTH_EXCEEDED,
                       stop_reason=f"q_{t} = {own}^alpha_{t} with a {digit_count(alpha_t)}-digit alpha_{t} "
                                   f"exceeds the digit budget of {c.digit_budget} digits")

    q_t = mpz(own) ** alpha_t
    a_t, remainder = divmod(q_t - c.q[t - 2], c.q[t - 1])
    if remainder != 0 or a_t < 1:
        raise ConsistencyError(f"a_{t} is not a positive integer: ({own}^{alpha_t} - q_{t - 2}) / q_{t - 1} "
                               f"leaves remainder {remainder}")
    if a_t * c.q[t - 1] + c.q[t - 2] != q_t:
        raise ConsistencyError(f"recurrence replay failed at t={t}")

    p_t = a_t * c.p[t - 1] + c.p[t - 2]
    logger.debug("t=%d alpha=%s omega=%s k=%d", t, alpha_t, omega, k)
    return replace(
        c,
        alpha=c.alpha + (alpha_t,),
        a=c.a + (a_t,),
        q=c.q + (q_t,),
        p=c.p + (p_t,),
        k_choices=c.k_choices + (k,),
        omegas=c.omegas + (omega,),
    )


def build(pi0: int, pi1: int, alpha1: int = 1, steps: int = 5,
          k: Union[None, str, Sequence[int]] = None,
          digit_budget: int = DEFAULT_DIGIT_BUDGET,
          order_iteration_cap: int = DEFAULT_ORDER_ITERATION_CAP) -> PrimePairConstruction:
    """
    Run init and extend until q_steps exists or the digit budget stops the run

    k is None/"minimal" for least multipliers or an explicit sequence k_2, k_3, ...
    """
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    explicit = None if k is None or k == "minimal" else list(k)
    c = init(pi0, pi1, alpha1, digit_budget, order_iteration_cap)
    while c.depth < steps and c.status == ACTIVE:
        choice = None
        if explicit is not None:
            position = len(c.q) - 2
            if position >= len(explicit):
                raise DomainError(f"k-sequence of length {len(explicit)} is too short for {steps} steps")
            choice = explicit[position]
        c = extend(c, choice)
    return c


@dataclass
class Check:
    name: str
    index: int
    passed: bool
    detail: str = ""

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "index": self.index, "passed": self.passed, "detail": self.detail}


@dataclass
class VerificationReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[Check]:
        return [check for check in self.checks if not check.passed]

    def to_json(self) -> Dict[str, Any]:
        return {"passed": self.passed, "count": len(self.checks),
                "failures": [check.to_json() for check in self.failures()]}


def congruence_check(c: PrimePairConstruction, t: int) -> bool:
    """pi_i**(alpha_t - alpha_{t-2}) == 1 modulo q_{t-1}, the condition that makes a_t integral"""
    if not 2 <= t <= c.depth:
        raise DomainError(f"congruence is defined for 2 <= t <= {c.depth}, got {t}")
    if c.q[t - 1] == 1:
        return True
    return gmpy2.powmod(c.prime(t), c.alpha[t] - c.alpha[t - 2], c.q[t - 1]) == 1


def verify(c: PrimePairConstruction) -> VerificationReport:
    """Re-derive every invariant of the built prefix from scratch"""
    report = VerificationReport()
    add = report.checks.append
    q = [mpz(0)] + [mpz(x) for x in c.q]    # shifted: q[t + 1] is q_t
    p = [mpz(1)] + [mpz(x) for x in c.p]

    add(Check("q0-is-one", 0, c.q[0] == 1))
    if c.depth >= 1:
        add(Check("q1-is-a1", 1, c.a[1] == c.q[1]))

    for t in range(1, c.depth + 1):
        own, other = c.prime(t), c.prime(t - 1)
        add(Check("prime-power", t, c.q[t] == mpz(own) ** c.alpha[t],
                  f"q_{t} should be {own}^{c.alpha[t]}"))
        add(Check("quotient-positive", t, c.a[t] >= 1))
        add(Check("recurrence", t, q[t + 1] == c.a[t] * q[t] + q[t - 1],
                  f"q_{t} != a_{t} q_{t - 1} + q_{t - 2}"))
        add(Check("numerator-recurrence", t, p[t + 1] == c.a[t] * p[t] + p[t - 1]))
        add(Check("coprime-neighbours", t, gmpy2.gcd(c.q[t - 1], c.q[t]) == 1))
        if t >= 2:
            add(Check("alpha-increasing", t, c.alpha[t] > c.alpha[t - 1]))
            add(Check("congruence", t, congruence_check(c, t),
                      f"{own}^(alpha_{t} - alpha_{t - 2}) mod {other}^alpha_{t - 1}"))

    for s in range(0, c.depth + 1):
        det = p[s + 1] * q[s] - p[s] * q[s + 1]
        add(Check("determinant", s, det == (-1) ** (s + 1)))
        add(Check("reduced", s, gmpy2.gcd(p[s + 1], q[s + 1]) == 1))

    if not report.passed:
        logger.warning("verify: %d failing checks", len(report.failures()))
    return report


def legendre_cutoff(tau: RationalLike) -> int:
    """Least q with q**(tau - 2) > 2; every tau-approximation with q past it is a convergent"""
    tau = to_rational(tau)
    if tau <= 2:
        raise DomainError(f"tau must exceed 2, got {tau}")
    return least_power_exceeding(tau - 2, 2)


@dataclass
class EvidenceReport:
    tau: ExactRational
    outside_q: Dict[int, bool]
    hits: List[int]
    misses: List[int]
    inconclusive: List[int]
    depths: Dict[int, int]
    legendre_cutoff: int
    convergent_hits_in_q: int

    @property
    def exceptional_bound(self) -> int:
        """Denominators in Q(pi0 pi1) can only approximate below the cutoff"""
        return self.legendre_cutoff - 1 + self.convergent_hits_in_q

    def to_json(self) -> Dict[str, Any]:
        return {
            "tau": str(self.tau),
            "outside_q": {str(s): flag for s, flag in self.outside_q.items()},
            "hits": self.hits, "misses": self.misses, "inconclusive": self.inconclusive,
            "depths": {str(s): d for s, d in self.depths.items()},
            "legendre_cutoff": str(self.legendre_cutoff),
            "convergent_hits_in_q": self.convergent_hits_in_q,
            "exceptional_bound": str(self.exceptional_bound),
        }


def wstar_evidence(c: PrimePairConstruction, tau: RationalLike) -> EvidenceReport:
    """
    Finite-scale evidence that the constructed number is tau-approximable only outside Q(pi0 pi1)

    Args:
        c: Construction with at least q_0..q_3
        tau: Exponent, > 2

    Returns:
        Which convergents provably beat q_s**(-tau), proof that every q_s (s >= 1) shares a
        prime with pi0*pi1, and the Legendre cutoff
    """
    tau = to_rational(tau)
    if tau <= 2:
        raise DomainError(f"tau must exceed 2, got {tau}")
    if len(c.q) < 4:
        raise DomainError(f"evidence needs at least 4 terms, construction has {len(c.q)}")

    cf = c.continued_fraction()
    m = c.pi0 * c.pi1
    outside, hits, misses, inconclusive, depths = {}, [], [], [], {}
    convergent_hits_in_q = 0
    for s in range(1, c.depth + 1):
        outside[s] = gmpy2.gcd(c.q[s], m) != 1
        verdict, depth = convergent_verdict(cf, s, tau)
        depths[s] = depth
        if verdict == Verdict.PROVEN:
            hits.append(s)
            if not outside[s]:
                convergent_hits_in_q += 1
        elif verdict == Verdict.REFUTED:
            misses.append(s)
        else:
            inconclusive.append(s)

    return EvidenceReport(tau=tau, outside_q=outside, hits=hits, misses=misses,
                          inconclusive=inconclusive, depths=depths,
                          legendre_cutoff=legendre_cutoff(tau),
                          convergent_hits_in_q=convergent_hits_in_q)


def irrationality_profile(source: Union[PrimePairConstruction, ContinuedFraction, Sequence[int]]) -> List[Tuple[int, float]]:
    """
    w_s = 1 + log q_{s+1} / log q_s along the prefix, for every s with q_s >= 2

    A lower-bound witness for the irrationality exponent on the built prefix, not a proof.
    """
    if isinstance(source, PrimePairConstruction):
        q = list(source.q)
    elif isinstance(source, ContinuedFraction):
        q = source.denominators
    else:
        q = list(source)
    if len(q) < 3:
        raise DomainError(f"profile needs at least 3 denominators, got {len(q)}")

    profile = []
    with mp.workdps(30):
        for s in range(1, len(q) - 1):
            if q[s] < 2:
                continue
            ratio = mp_log(mpf(int(q[s + 1]))) / mp_log(mpf(int(q[s])))
            profile.append((s, float(1 + ratio)))
    return profile


def _integer_json(value: int, inline_digits: int, prime: Optional[int] = None,
                  exponent: Optional[int] = None) -> Union[str, Dict[str, str]]:
    if digit_count(value) <= inline_digits:
        return str(value)
    if prime is not None:
        return {"prime": str(prime), "exponent": str(exponent)}
    return {"digits": str(digit_count(value))}


def to_certificate(c: PrimePairConstruction, inline_digits: int = 10 ** 4,
                   checks: Optional[VerificationReport] = None,
                   evidence: Optional[EvidenceReport] = None) -> Dict[str, Any]:
    """
    JSON-ready certificate; integers past inline_digits become {prime, exponent} pairs, and
    oversized a_t are written as (pi_i^alpha_t - pi_i^alpha_{t-2}) / pi_{1-i}^alpha_{t-1}
    """
    a_json = []
    for t, a_t in enumerate(c.a):
        if t < 2 or digit_count(a_t) <= inline_digits:
            a_json.append(str(a_t))
            continue
        a_json.append({
            "numerator": {"prime": str(c.prime(t)), "exponent": str(c.alpha[t])},
            "minus": {"prime": str(c.prime(t)), "exponent": str(c.alpha[t - 2])},
            "divisor": {"prime": str(c.prime(t - 1)), "exponent": str(c.alpha[t - 1])},
            "digits": str(digit_count(a_t)),
        })

    certificate = {
        "pi0": str(c.pi0),
        "pi1": str(c.pi1),
        "alpha": [str(x) for x in c.alpha],
        "k": [str(k) for k in c.k_choices],
        "a": a_json,
        "q": [_integer_json(q_t, inline_digits, c.prime(t), c.alpha[t]) for t, q_t in enumerate(c.q)],
        "status": c.status,
    }
    if c.stop_reason:
        certificate["stop_reason"] = c.stop_reason
    if checks is not None:
        certificate["checks"] = checks.to_json()
    if evidence is not None:
        certificate["evidence"] = evidence.to_json()
    return certificate
