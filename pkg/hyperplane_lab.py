"""
Rational hyperplanes and simultaneous approximation
Dependence transfer on a1 x1 + ... + an xn = u/v, exact scans for tau-approximations and W* point generation
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from multiprocessing import Pool
from typing import List, Dict, Any, Optional, Sequence, Tuple

import gmpy2
from gmpy2 import mpz, mpq
from mpmath import mp, mpf, nstr

from cf_engine import Enclosure, Verdict, combine
from exact_kernel import ExactRational, RationalLike, digit_count, least_power_exceeding, to_rational
from lab_errors import DomainError, RangeError
from liouville_builder import PrimePairConstruction
from qfree_sets import FreeSetSpec

logger = logging.getLogger(__name__)

# bits kept by the coarse pre-filter that discards far candidates before exact comparison
COARSE_BITS = 256


@dataclass(frozen=True)
class Hyperplane:
    """
    a1 x1 + ... + an xn = u/v with integer coefficients and a_n != 0
    """
    A: Tuple[int, ...]
    u: int
    v: int = 1

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(int(a) for a in self.A))
        if len(self.A) < 2:
            raise DomainError(f"a hyperplane needs n >= 2 coefficients, got {len(self.A)}")
        if self.A[-1] == 0:
            raise DomainError("the last coefficient must be non-zero")
        if self.v < 1:
            raise DomainError(f"v must be >= 1, got {self.v}")
        if gmpy2.gcd(abs(self.u), self.v) != 1:
            raise DomainError(f"u/v must be reduced, got {self.u}/{self.v}")

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def b(self) -> ExactRational:
        return mpq(self.u, self.v)

    @classmethod
    def parse(cls, coefficients: str, target: str) -> "Hyperplane":
        """From "1,-1" and "1/2" style literals"""
        try:
            A = tuple(int(a) for a in coefficients.split(","))
        except ValueError:
            raise DomainError(f"coefficients must be comma-separated integers, got {coefficients!r}")
        b = to_rational(target)
        return cls(A, int(b.numerator), int(b.denominator))

    def to_json(self) -> Dict[str, Any]:
        return {"A": [str(a) for a in self.A], "u": str(self.u), "v": str(self.v)}


def lipschitz_constant(h: Hyperplane) -> ExactRational:
    """K(A) = sum |a_i| / |a_n|"""
    return mpq(sum(abs(a) for a in h.A), abs(h.A[-1]))


def lift(h: Hyperplane, y: Sequence[RationalLike]) -> ExactRational:
    """The unique x_n putting (y, x_n) on the hyperplane"""
    if len(y) != h.n - 1:
        raise DomainError(f"expected {h.n - 1} coordinates, got {len(y)}")
    partial = sum((a * to_rational(x) for a, x in zip(h.A, y)), mpq(0))
    return (h.b - partial) / h.A[-1]


def lift_enclosure(h: Hyperplane, y: Sequence[Enclosure]) -> Enclosure:
    """lift() for coordinates presented as enclosures"""
    if len(y) != h.n - 1:
        raise DomainError(f"expected {h.n - 1} coordinates, got {len(y)}")
    a_n = h.A[-1]
    return combine(((mpq(-a, a_n), x) for a, x in zip(h.A, y)), h.b / a_n)


def dependence_threshold(A: Sequence[int], tau: RationalLike, v: int = 1) -> int:
    """
    Least q0 with q0**(tau - 1) > v * sum |a_i|

    For q >= q0 every p with |x_i - p_i/q| < q**(-tau) on a point of the hyperplane satisfies
    v * sum a_i p_i = u * q, because that integer is smaller than 1 in absolute value.
    """
    tau = to_rational(tau)
    if tau <= 1:
        raise DomainError(f"tau must exceed 1, got {tau}")
    if v < 1:
        raise DomainError(f"v must be >= 1, got {v}")
    total = v * sum(abs(int(a)) for a in A)
    if total == 0:
        raise DomainError("coefficient vector must be non-zero")
    return least_power_exceeding(tau - 1, total)


def check_transfer(h: Hyperplane, q: int, p: Sequence[int]) -> bool:
    """True iff p/q lies on the hyperplane: v * sum a_i p_i == u * q"""
    if len(p) != h.n:
        raise DomainError(f"expected {h.n} numerators, got {len(p)}")
    return h.v * sum(a * int(x) for a, x in zip(h.A, p)) == h.u * q


def rational_points(h: Hyperplane, q: int, box: Sequence[Tuple[int, int]]) -> List[Tuple[int, ...]]:
    """
    Integer vectors p inside box (inclusive bounds per coordinate) with p/q on the hyperplane

    Solvable only when v | q and gcd(A) divides u q / v; otherwise the list is empty without search.
    """
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    if len(box) != h.n:
        raise DomainError(f"box needs {h.n} coordinate ranges, got {len(box)}")
    if q % h.v != 0:
        return []
    target = h.u * q // h.v
    g = reduce(gmpy2.gcd, (mpz(a) for a in h.A))
    if target % g != 0:
        return []

    a_n = h.A[-1]
    lo_n, hi_n = box[-1]
    points = []
    for head in product(*(range(lo, hi + 1) for lo, hi in box[:-1])):
        rest = target - sum(a * x for a, x in zip(h.A, head))
        if rest % a_n != 0:
            continue
        last = rest // a_n
        if lo_n <= last <= hi_n:
            points.append(tuple(head) + (last,))
    return points


def sandwich_holds(h: Hyperplane, x: Sequence[RationalLike], y: Sequence[RationalLike]) -> bool:
    """
    max_{i<n} |x_i - y_i| <= max_i |x_i - y_i| <= K(A) max_{i<n} |x_i - y_i| for x, y on h
    """
    x = [to_rational(c) for c in x]
    y = [to_rational(c) for c in y]
    for point in (x, y):
        if len(point) != h.n or sum(a * c for a, c in zip(h.A, point)) != h.b:
            raise DomainError("both points must lie on the hyperplane")
    head = max(abs(a - b) for a, b in zip(x[:-1], y[:-1]))
    full = max(head, abs(x[-1] - y[-1]))
    return head <= full <= lipschitz_constant(h) * head


@dataclass
class ScanHit:
    q: int
    p: Tuple[int, ...]
    proof: Verdict
    error_bounds: Tuple[ExactRational, ...]
    in_q: Optional[bool] = None

    def to_json(self) -> Dict[str, Any]:
        with mp.workdps(20):
            errors = [nstr(mpf(e.numerator) / mpf(e.denominator), 8) for e in self.error_bounds]
        return {"q": str(mpz(self.q)), "p": [str(mpz(x)) for x in self.p], "proof": self.proof.value,
                "in_Q": self.in_q, "error_bounds": errors}


def presentation(x: Enclosure, inline_digits: int = 10 ** 4) -> Dict[str, Any]:
    """JSON presentation of a coordinate: exact value, or an open interval"""
    digits = max(digit_count(x.lo.denominator), digit_count(x.hi.denominator))
    if x.exact:
        if digits > inline_digits:
            return {"exact": True, "denominator_digits": str(digits)}
        return {"exact": True, "value": str(x.lo)}
    if digits > inline_digits:
        with mp.workdps(30):
            mid = x.midpoint
            approx = nstr(mpf(mid.numerator) / mpf(mid.denominator), 20)
        return {"exact": False, "approx": approx, "denominator_digits": str(digits)}
    return {"exact": False, "lo": str(x.lo), "hi": str(x.hi)}


@dataclass
class ScanReport:
    """Hits of a finite q-scan; a hit is proven only when every coordinate's inequality is"""
    point: List[Enclosure]
    tau: ExactRational
    q_max: int
    hits: List[ScanHit] = field(default_factory=list)
    threshold: Optional[int] = None
    scanned: int = 0

    @property
    def proven(self) -> List[ScanHit]:
        return [hit for hit in self.hits if hit.proof == Verdict.PROVEN]

    @property
    def in_q_count(self) -> int:
        return sum(1 for hit in self.proven if hit.in_q)

    @property
    def out_q_count(self) -> int:
        return sum(1 for hit in self.proven if hit.in_q is False)

    @property
    def inconclusive_count(self) -> int:
        return sum(1 for hit in self.hits if hit.proof == Verdict.INCONCLUSIVE)

    def to_json(self, inline_digits: int = 10 ** 4) -> Dict[str, Any]:
        summary = {
            "in_Q_count": self.in_q_count,
            "out_Q_count": self.out_q_count,
            "inconclusive_count": self.inconclusive_count,
            "scanned": self.scanned,
        }
        if self.threshold is not None:
            summary["threshold"] = str(self.threshold)
        return {
            "x": [presentation(x, inline_digits) for x in self.point],
            "tau": str(self.tau),
            "q_max": str(self.q_max),
            "hits": [hit.to_json() for hit in self.hits],
            "summary": summary,
        }


def _coordinate_candidates(x: Enclosure, coarse: Optional[Enclosure], q: int, tau: ExactRational,
                           scale: ExactRational) -> List[Tuple[int, Verdict, ExactRational]]:
    first = gmpy2.f_div(x.lo.numerator * q, x.lo.denominator) - 1
    last = gmpy2.c_div(x.hi.numerator * q, x.hi.denominator) + 1
    use_coarse = coarse is not None and mpz(q).bit_length() * 4 < COARSE_BITS
    found = []
    for offset in range(int(last - first) + 1):
        p = first + offset
        r = mpq(p, q)
        if use_coarse and coarse.below(r, q, tau, scale) == Verdict.REFUTED:
            continue
        verdict = x.below(r, q, tau, scale)
        if verdict != Verdict.REFUTED:
            found.append((p, verdict, x.distance_bounds(r)[1]))
    return found


def _scan_one(point: Sequence[Enclosure], coarse: Sequence[Enclosure], q: int, tau: ExactRational,
              scales: Sequence[ExactRational], spec: Optional[FreeSetSpec]) -> List[ScanHit]:
    per_coordinate = []
    for x, c, scale in zip(point, coarse, scales):
        found = _coordinate_candidates(x, c, q, tau, scale)
        if not found:
            return []
        per_coordinate.append(found)

    in_q = spec.member(q) if spec is not None else None
    hits = []
    for combo in product(*per_coordinate):
        proven = all(verdict == Verdict.PROVEN for _, verdict, _ in combo)
        hits.append(ScanHit(
            q=q,
            p=tuple(p for p, _, _ in combo),
            proof=Verdict.PROVEN if proven else Verdict.INCONCLUSIVE,
            error_bounds=tuple(bound for _, _, bound in combo),
            in_q=in_q,
        ))
    return hits


# set once per worker process by the pool initializer
_scan_state: Dict[str, Any] = {}


def _init_scan_worker(point, coarse, tau, scales, spec):
    _scan_state.update(point=point, coarse=coarse, tau=tau, scales=scales, spec=spec)


def _scan_in_worker(q: int) -> List[ScanHit]:
    state = _scan_state
    return _scan_one(state["point"], state["coarse"], q, state["tau"], state["scales"], state["spec"])


def scan_point(point: Sequence[Enclosure], tau: RationalLike, q_values: Sequence[int],
               spec: Optional[FreeSetSpec] = None, scales: Optional[Sequence[RationalLike]] = None,
               threads: int = 1) -> ScanReport:
    """
    Test every q in q_values for |x_i - p_i/q| < scale_i * q**(-tau) on all coordinates

    Args:
        point: Coordinates as enclosures (exact points use Enclosure.point)
        tau: Exponent, > 1
        q_values: Denominators to test, each >= 1
        spec: Optional Q; hits are then tagged with q in Q
        scales: Per-coordinate factors on the bound, default 1
        threads: Worker processes for the q partition; the report is merged in q order

    Returns:
        ScanReport with proven and inconclusive hits; refuted candidates are dropped
    """
    tau = to_rational(tau)
    if tau <= 1:
        raise DomainError(f"tau must exceed 1, got {tau}")
    scales = [mpq(1)] * len(point) if scales is None else [to_rational(s) for s in scales]
    if len(scales) != len(point):
        raise DomainError("one scale per coordinate is required")
    q_values = sorted(set(mpz(q) for q in q_values))
    if q_values and q_values[0] < 1:
        raise DomainError("denominators must be >= 1")

    coarse = [x.coarsen(COARSE_BITS) for x in point]

    if threads > 1 and len(q_values) > 1:
        chunk = max(1, len(q_values) // (4 * threads))
        state = (list(point), coarse, tau, scales, spec)
        with Pool(threads, initializer=_init_scan_worker, initargs=state) as pool:
            batches = pool.map(_scan_in_worker, q_values, chunksize=chunk)
    else:
        batches = [_scan_one(point, coarse, q, tau, scales, spec) for q in q_values]

    report = ScanReport(point=list(point), tau=tau, q_max=q_values[-1] if q_values else 0,
                        scanned=len(q_values))
    for batch in batches:
        report.hits.extend(batch)
    logger.debug("scanned %d denominators, %d hits", len(q_values), len(report.hits))
    return report


@dataclass
class TransferReport:
    threshold: int
    proven_hits: int
    inconclusive_hits: int
    violations_above: List[Tuple[int, Tuple[int, ...]]] = field(default_factory=list)
    failures_below: List[Tuple[int, Tuple[int, ...]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations_above

    def to_json(self) -> Dict[str, Any]:
        def rows(items):
            return [{"q": str(mpz(q)), "p": [str(mpz(x)) for x in p]} for q, p in items]
        return {
            "threshold": str(self.threshold),
            "proven_hits": self.proven_hits,
            "inconclusive_hits": self.inconclusive_hits,
            "violations_above_threshold": rows(self.violations_above),
            "failures_below_threshold": rows(self.failures_below),
            "ok": self.ok,
        }


def default_point(h: Hyperplane) -> List[Enclosure]:
    """A fixed exact point of h: x_i = 1/(i + 3) for i < n, then the lift"""
    head = [mpq(1, i + 3) for i in range(h.n - 1)]
    return [Enclosure.point(x) for x in head] + [Enclosure.point(lift(h, head))]


def transfer_property_test(h: Hyperplane, tau: RationalLike, q_values: Sequence[int],
                           point: Optional[Sequence[Enclosure]] = None, threads: int = 1) -> TransferReport:
    """
    Scan a point of h and check every proven tau-approximation at or past the threshold lies on h

    Failures below the threshold are allowed and only reported.
    """
    tau = to_rational(tau)
    point = list(point) if point is not None else default_point(h)
    if len(point) != h.n:
        raise DomainError(f"point needs {h.n} coordinates, got {len(point)}")
    threshold = dependence_threshold(h.A, tau, h.v)
    scan = scan_point(point, tau, q_values, threads=threads)

    report = TransferReport(threshold=threshold, proven_hits=len(scan.proven),
                            inconclusive_hits=scan.inconclusive_count)
    for hit in scan.proven:
        if check_transfer(h, hit.q, hit.p):
            continue
        if hit.q >= threshold:
            report.violations_above.append((hit.q, hit.p))
        else:
            report.failures_below.append((hit.q, hit.p))
    if report.violations_above:
        logger.error("transfer violated above threshold %d: %s", threshold, report.violations_above[:5])
    return report


@dataclass
class WStarReport:
    hyperplane: Hyperplane
    scan: ScanReport
    seed_hits: List[int]
    threshold: int
    all_large_hits_multiple_of_v: bool

    def to_json(self, inline_digits: int = 10 ** 4) -> Dict[str, Any]:
        document = self.scan.to_json(inline_digits)
        document["hyperplane"] = self.hyperplane.to_json()
        document["seed_hits"] = self.seed_hits
        document["summary"]["threshold"] = str(self.threshold)
        document["summary"]["all_large_hits_multiple_of_v"] = self.all_large_hits_multiple_of_v
        return document


def wstar_point_from_seed(h: Hyperplane, seeds: Sequence[PrimePairConstruction], tau: RationalLike,
                          spec: FreeSetSpec, scan_limit: int = 2000, threads: int = 1) -> WStarReport:
    """
    Put seed-built coordinates on h and scan the resulting point for tau-approximations

    The first n-1 coordinates are the seeds' numbers and are tested against K(A)^-1 q^-tau, so
    a proven hit there forces the lifted coordinate within q^-tau. Denominators tested are
    v * lcm(seed q_s) for every convergent index s plus 2..scan_limit.

    Args:
        h: Hyperplane whose v lies outside Q
        seeds: n-1 constructions of equal depth
        tau: Exponent, > 2
        spec: Q
        scan_limit: Largest directly scanned denominator

    Returns:
        WStarReport; past the dependence threshold every proven hit has v | q
    """
    tau = to_rational(tau)
    if tau <= 2:
        raise DomainError(f"tau must exceed 2, got {tau}")
    if spec.member(h.v):
        raise DomainError(f"v={h.v} belongs to Q ({spec}); choose u/v with v outside Q")
    if len(seeds) != h.n - 1:
        raise DomainError(f"{h.n - 1} seeds are needed for n={h.n}, got {len(seeds)}")
    depths = {seed.depth for seed in seeds}
    if len(depths) != 1:
        raise RangeError(f"seeds have unequal depths {sorted(depths)}")
    depth = depths.pop()

    head = [seed.x_enclosure() for seed in seeds]
    point = head + [lift_enclosure(h, head)]
    k_inverse = 1 / lipschitz_constant(h)
    scales = [k_inverse] * (h.n - 1) + [mpq(1)]

    seed_q = {}
    for s in range(1, depth + 1):
        seed_q[s] = h.v * reduce(gmpy2.lcm, (mpz(seed.q[s]) for seed in seeds))
    q_values = set(seed_q.values()) | set(range(2, scan_limit + 1))

    scan = scan_point(point, tau, q_values, spec, scales, threads)
    threshold = dependence_threshold(h.A, tau, h.v)
    scan.threshold = threshold

    proven_q = {hit.q for hit in scan.proven}
    seed_hits = [s for s, q in seed_q.items() if q in proven_q]
    multiples = all(hit.q % h.v == 0 for hit in scan.proven if hit.q >= threshold)
    logger.info("W* scan: seed hits %s, in-Q proven hits %d", seed_hits, scan.in_q_count)
    return WStarReport(hyperplane=h, scan=scan, seed_hits=seed_hits, threshold=threshold,
                       all_large_hits_multiple_of_v=multiples)
