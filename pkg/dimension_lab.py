"""
Dimension lab
Exact Hausdorff-dimension formulas and a desk-scale estimate of the natural-cover series abscissa
"""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import List, Dict, Any, Optional, Sequence, Tuple, Union

import numpy as np
from gmpy2 import mpq
from mpmath import mp, mpf, fsum, nstr, exp as mp_exp

from exact_kernel import ExactRational, RationalLike, to_rational
from lab_errors import DomainError, InconclusiveError
from qfree_sets import FreeSetSpec, convergence_exponent, members_up_to

logger = logging.getLogger(__name__)

TARGETS = ("w", "wq", "wstar")
MIN_Q_MAX = 2 ** 16
DEFAULT_S_STEP = mpq(1, 20)


@dataclass
class DimensionVerdict:
    """
    Dimension of W_{tau,n}, W_{tau,n}(Q) or W*_{tau,n}(Q) as far as the known theorems assert it

    value is set for point answers and interval for the two-sided bound; asserted is False
    when a hypothesis of the formula fails, and then neither is set.
    """
    n: int
    tau: ExactRational
    target: str
    nu: Optional[ExactRational]
    value: Optional[ExactRational] = None
    interval: Optional[Tuple[ExactRational, ExactRational]] = None
    gates: Dict[str, Optional[bool]] = field(default_factory=dict)
    asserted: bool = True
    source: str = ""

    def to_json(self) -> Dict[str, Any]:
        document = {
            "n": str(self.n),
            "tau": str(self.tau),
            "set": self.target,
            "nu": None if self.nu is None else str(self.nu),
            "gates": self.gates,
            "asserted": self.asserted,
            "source": self.source,
        }
        if self.value is not None:
            document["value"] = str(self.value)
        if self.interval is not None:
            document["interval"] = [str(self.interval[0]), str(self.interval[1])]
        if not self.asserted:
            document["note"] = "formula not asserted: a hypothesis fails"
        return document


def _resolve_nu(nu_or_spec: Union[RationalLike, FreeSetSpec, None]) -> Optional[ExactRational]:
    if nu_or_spec is None:
        return None
    if isinstance(nu_or_spec, FreeSetSpec):
        exponent = convergence_exponent(nu_or_spec)
        if exponent.value is None:
            raise DomainError(f"nu({nu_or_spec}) is not known exactly; pass nu as a number")
        return exponent.value
    nu = to_rational(nu_or_spec)
    if not 0 <= nu <= 1:
        raise DomainError(f"nu must lie in [0, 1], got {nu}")
    return nu


def theoretical_dimension(n: int, tau: RationalLike, nu_or_spec: Union[RationalLike, FreeSetSpec, None] = None,
                          target: str = "w") -> DimensionVerdict:
    """
    Dimension formula for the chosen set

    Args:
        n: Ambient dimension, >= 1
        tau: Approximation exponent, > 1
        nu_or_spec: nu(Q) as a number, or a FreeSetSpec whose nu is known exactly
        target: "w" (all denominators), "wq" (denominators in Q) or "wstar" (i.m. outside Q, f.m. inside)

    Returns:
        (n+1)/tau for w, (n+nu)/tau for wq; for wstar (n+1)/tau when nu < 1, or the bounds
        [n/tau, (n+1)/tau] when nu = 1 and n >= 2
    """
    tau = to_rational(tau)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if tau <= 1:
        raise DomainError(f"tau must exceed 1, got {tau}")
    if target not in TARGETS:
        raise DomainError(f"set must be one of {', '.join(TARGETS)}, got {target!r}")
    nu = _resolve_nu(nu_or_spec)
    if target != "w" and nu is None:
        raise DomainError(f"set {target} needs nu or a spec")

    gates = {"tau>1+1/n": tau > 1 + mpq(1, n)}
    if nu is not None:
        gates["tau>1+nu/n"] = tau > 1 + nu / n
    gates["tau>1+1/(n-1)"] = tau > 1 + mpq(1, n - 1) if n >= 2 else None
    verdict = DimensionVerdict(n=n, tau=tau, target=target, nu=nu, gates=gates)

    if target == "w":
        verdict.source = "jarnik-besicovitch"
        if gates["tau>1+1/n"]:
            verdict.value = mpq(n + 1) / tau
        else:
            verdict.asserted = False
    elif target == "wq":
        verdict.source = "borosh-fraenkel"
        if gates["tau>1+nu/n"]:
            verdict.value = (n + nu) / tau
        else:
            verdict.asserted = False
    else:
        verdict.source = "theorem1-bounds"
        if nu < 1 and gates["tau>1+1/n"]:
            verdict.value = mpq(n + 1) / tau
        elif nu == 1 and gates["tau>1+1/(n-1)"]:
            verdict.interval = (mpq(n) / tau, mpq(n + 1) / tau)
        else:
            verdict.asserted = False
    return verdict


def cover_series(spec: FreeSetSpec, n: int, tau: RationalLike, s: RationalLike,
                 Q0: int, Q1: int, precision: int = 50) -> mpf:
    """
    Sum over q in Q, Q0 <= q <= Q1, of q**n * (2 q**(-tau))**s at the given decimal precision

    q**n counts the rational points with denominator q in the unit cube, each covered by a
    ball of diameter 2 q**(-tau).
    """
    tau = to_rational(tau)
    s = to_rational(s)
    if Q0 < 1 or Q0 > Q1:
        raise DomainError(f"need 1 <= Q0 <= Q1, got Q0={Q0}, Q1={Q1}")
    if s <= 0:
        raise DomainError(f"s must be positive, got {s}")
    members = members_up_to(spec, Q1)
    members = members[members >= Q0]
    with mp.workdps(precision):
        s_f = mpf(int(s.numerator)) / int(s.denominator)
        tau_f = mpf(int(tau.numerator)) / int(tau.denominator)
        exponent = n - s_f * tau_f
        factor = mpf(2) ** s_f
        return factor * fsum(mpf(int(q)) ** exponent for q in members)


def default_s_grid(n: int, step: ExactRational = DEFAULT_S_STEP) -> List[ExactRational]:
    """step, 2 step, ..., n + 1"""
    count = int((n + 1) / step)
    return [step * i for i in range(1, count + 1)]


def _full_block_count(Q_max: int) -> int:
    # blocks [2^j, 2^(j+1)) lying inside [1, Q_max]
    return int(Q_max + 1).bit_length() - 1


def _block_log_sums(log_q: np.ndarray, starts: np.ndarray, n: int, tau: float, s: float) -> np.ndarray:
    """Natural log of each dyadic block sum, NaN for empty blocks"""
    terms = s * np.log(2.0) + (n - s * tau) * log_q
    sums = np.full(len(starts) - 1, np.nan)
    for j in range(len(starts) - 1):
        block = terms[starts[j]:starts[j + 1]]
        if block.size == 0:
            continue
        top = block.max()
        sums[j] = top + np.log(np.exp(block - top).sum())
    return sums


@dataclass
class BlockSlope:
    s: ExactRational
    slope: Optional[float]
    log2_sums: List[Optional[float]]


def _slope_at(s: ExactRational, log_q: np.ndarray, starts: np.ndarray, usable: np.ndarray,
              n: int, tau: float) -> BlockSlope:
    log2_sums = _block_log_sums(log_q, starts, n, tau, float(s)) / np.log(2.0)
    slope = float(np.polyfit(usable.astype(np.float64), log2_sums[usable], 1)[0])
    return BlockSlope(s, slope, [None if np.isnan(x) else float(x) for x in log2_sums])


# set once per worker process by the pool initializer
_block_state: Dict[str, Any] = {}


def _init_block_worker(log_q, starts, usable, n, tau):
    _block_state.update(log_q=log_q, starts=starts, usable=usable, n=n, tau=tau)


def _slope_in_worker(s: ExactRational) -> BlockSlope:
    return _slope_at(s, **_block_state)


@dataclass
class CriticalExponentReport:
    spec: str
    n: int
    tau: ExactRational
    Q_max: int
    s_star: Optional[float]
    slopes: List[BlockSlope]
    skipped_blocks: List[int]
    exact_value: Optional[ExactRational] = None

    @property
    def abs_error(self) -> Optional[float]:
        if self.s_star is None or self.exact_value is None:
            return None
        return abs(self.s_star - float(self.exact_value))

    def to_json(self) -> Dict[str, Any]:
        def fixed(x):
            return None if x is None else f"{x:.6f}"
        return {
            "spec": self.spec,
            "n": str(self.n),
            "tau": str(self.tau),
            "Q_max": str(self.Q_max),
            "s_star": fixed(self.s_star),
            "exact_value": None if self.exact_value is None else str(self.exact_value),
            "abs_error": fixed(self.abs_error),
            "skipped_blocks": self.skipped_blocks,
            "slopes": [{"s": str(row.s), "slope": fixed(row.slope)} for row in self.slopes],
        }


def critical_exponent(spec: FreeSetSpec, n: int, tau: RationalLike, Q_max: int = 2 ** 20,
                      s_grid: Optional[Sequence[RationalLike]] = None,
                      threads: int = 1) -> CriticalExponentReport:
    """
    Locate the convergence abscissa of cover_series from dyadic block growth

    For each s the block sums S_j over [2^j, 2^(j+1)) grow like 2^(j g(s)); g is fitted by least
    squares on the upper half of the blocks and s_star is where g crosses zero, interpolated
    linearly between neighbouring grid points.

    Args:
        spec: Q
        n: Dimension, >= 1
        tau: Exponent, > 1
        Q_max: Largest denominator, >= 2**16
        s_grid: Increasing values in (0, n + 1]; default steps of 1/20
        threads: Worker processes across s values; slopes are merged in grid order

    Returns:
        CriticalExponentReport; s_star is None when g never changes sign on the grid
    """
    tau = to_rational(tau)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if tau <= 1:
        raise DomainError(f"tau must exceed 1, got {tau}")
    if Q_max < MIN_Q_MAX:
        raise DomainError(f"Q_max must be >= 2^16, got {Q_max}")
    grid = default_s_grid(n) if s_grid is None else sorted(to_rational(s) for s in s_grid)
    if not grid or grid[0] <= 0 or grid[-1] > n + 1:
        raise DomainError(f"s grid must lie in (0, {n + 1}]")

    blocks = _full_block_count(Q_max)
    members = members_up_to(spec, 2 ** blocks - 1).astype(np.float64)
    edges = np.array([2.0 ** j for j in range(blocks + 1)])
    starts = np.searchsorted(members, edges)
    log_q = np.log(members)
    counts = np.diff(starts)
    skipped = [j for j in range(blocks) if counts[j] == 0]
    if skipped:
        logger.info("critical_exponent: %d empty blocks skipped", len(skipped))

    fit_from = blocks // 2
    usable = np.array([j for j in range(fit_from, blocks) if counts[j] > 0])
    if len(usable) < 2:
        raise InconclusiveError(f"only {len(usable)} non-empty blocks in the upper half up to {Q_max}")
    state = (log_q, starts, usable, n, float(tau))
    if threads > 1 and len(grid) > 1:
        with Pool(min(threads, len(grid)), initializer=_init_block_worker, initargs=state) as pool:
            slopes = pool.map(_slope_in_worker, grid)
    else:
        slopes = [_slope_at(s, *state) for s in grid]

    s_star = None
    for previous, current in zip(slopes, slopes[1:]):
        if previous.slope > 0 >= current.slope:
            s0, s1 = float(previous.s), float(current.s)
            g0, g1 = previous.slope, current.slope
            s_star = s0 + (s1 - s0) * g0 / (g0 - g1)
            break
    if s_star is None:
        logger.warning("block slope never changes sign on the s grid")

    exact = convergence_exponent(spec).value
    return CriticalExponentReport(
        spec=str(spec), n=n, tau=tau, Q_max=Q_max, s_star=s_star, slopes=slopes,
        skipped_blocks=skipped,
        exact_value=None if exact is None else (n + exact) / tau,
    )


def block_table(report: CriticalExponentReport) -> List[Dict[str, str]]:
    """CSV rows (spec, n, tau, s, block_j, block_sum, slope) for every s and non-empty block"""
    rows = []
    with mp.workdps(15):
        for row in report.slopes:
            for j, log2_sum in enumerate(row.log2_sums):
                if log2_sum is None:
                    continue
                rows.append({
                    "spec": report.spec,
                    "n": str(report.n),
                    "tau": str(report.tau),
                    "s": str(row.s),
                    "block_j": str(j),
                    "block_sum": nstr(mp_exp(mpf(log2_sum) * mp.log(2)), 10),
                    "slope": f"{row.slope:.6f}",
                })
    return rows
