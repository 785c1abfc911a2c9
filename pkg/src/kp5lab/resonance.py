"""
Dispersion symbols and resonance functions on the lattice of T x (1/lambda)T.

A y-frequency is stored as its lattice index k (physical frequency lambda * k).
Only lambda^2 = 35 ever enters, so every symbol value below is an exact rational.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Callable, List, Tuple

from .constants import LAMBDA_SQUARED
from .exceptions import ParameterError
from .numtheory import AdmissibleIndex

logger = logging.getLogger(__name__)

ExactRational = Fraction


@dataclass(frozen=True)
class LatticeFrequency:
    """Frequency (m, lambda * k) of the dual lattice."""

    m: int
    k: int

    def __post_init__(self) -> None:
        if self.m == 0:
            raise ParameterError("x-frequency m must be nonzero (the field lives in D0')")

    def __add__(self, other: "LatticeFrequency") -> "LatticeFrequency":
        return LatticeFrequency(self.m + other.m, self.k + other.k)

    def as_tuple(self) -> Tuple[int, int]:
        return self.m, self.k


ResonantPair = Tuple[LatticeFrequency, LatticeFrequency]


def omega(f: LatticeFrequency) -> ExactRational:
    """Fifth-order KP-I symbol m^5 + (lambda k)^2 / m."""
    return Fraction(f.m**5) + Fraction(LAMBDA_SQUARED * f.k * f.k, f.m)


def omega_kpii(f: LatticeFrequency) -> ExactRational:
    """KP-II symbol m^3 - (lambda k)^2 / m."""
    return Fraction(f.m**3) - Fraction(LAMBDA_SQUARED * f.k * f.k, f.m)


def _check_pair(f1: LatticeFrequency, f2: LatticeFrequency) -> None:
    if f1.m + f2.m == 0:
        raise ParameterError(f"x-frequencies {f1.m} and {f2.m} cancel")


def _slope_gap_squared(f1: LatticeFrequency, f2: LatticeFrequency) -> ExactRational:
    """(n1/m1 - n2/m2)^2 with n = lambda k."""
    return LAMBDA_SQUARED * (Fraction(f1.k, f1.m) - Fraction(f2.k, f2.m)) ** 2


def _confirm(
    closed: ExactRational,
    symbol: Callable[[LatticeFrequency], ExactRational],
    f1: LatticeFrequency,
    f2: LatticeFrequency,
) -> ExactRational:
    difference = symbol(f1 + f2) - symbol(f1) - symbol(f2)
    if closed != difference:
        raise ArithmeticError(
            f"closed form {closed} != symbol difference {difference} for {f1}, {f2}"
        )
    return closed


def resonance_kpi5(f1: LatticeFrequency, f2: LatticeFrequency) -> ExactRational:
    """
    Omega(f1, f2) = omega(f1 + f2) - omega(f1) - omega(f2) for fifth-order KP-I.

    Evaluated by the factored closed form
    m1 m2 / (m1 + m2) * {5 (m1+m2)^2 (m1^2 + m1 m2 + m2^2) - (n1/m1 - n2/m2)^2}
    and confirmed against the symbol difference.

    Raises:
        ParameterError: If m1 + m2 = 0.
        ArithmeticError: If the two evaluations disagree.
    """
    _check_pair(f1, f2)
    m1, m2 = f1.m, f2.m
    s = m1 + m2
    closed = Fraction(m1 * m2, s) * (
        5 * s * s * (m1 * m1 + m1 * m2 + m2 * m2) - _slope_gap_squared(f1, f2)
    )
    return _confirm(closed, omega, f1, f2)


def resonance_kpii(f1: LatticeFrequency, f2: LatticeFrequency) -> ExactRational:
    """KP-II counterpart: m1 m2 / (m1 + m2) * {3 (m1+m2)^2 + (n1/m1 - n2/m2)^2}."""
    _check_pair(f1, f2)
    m1, m2 = f1.m, f2.m
    s = m1 + m2
    closed = Fraction(m1 * m2, s) * (3 * s * s + _slope_gap_squared(f1, f2))
    return _confirm(closed, omega_kpii, f1, f2)


def is_resonant_kpi5(f1: LatticeFrequency, f2: LatticeFrequency) -> bool:
    """
    Integer-only zero test for the KP-I resonance function.

    Clearing m1^2 m2^2 from the bracket, Omega = 0 iff
    (m1+m2)^2 (m1^2 + m1 m2 + m2^2) m1^2 m2^2 = 7 (k1 m2 - k2 m1)^2.
    """
    m1, m2 = f1.m, f2.m
    s = m1 + m2
    if s == 0:
        return False
    lhs = 5 * s * s * (m1 * m1 + m1 * m2 + m2 * m2) * m1 * m1 * m2 * m2
    rhs = LAMBDA_SQUARED * (f1.k * m2 - f2.k * m1) ** 2
    return lhs == rhs


def omega_npm1(idx: AdmissibleIndex) -> Tuple[ExactRational, ExactRational]:
    """
    (Omega_{n-1}, Omega_{n+1}) with Omega_{n-1} = -Omega(1,0,n-1,alpha) and
    Omega_{n+1} = +Omega(1,0,n+1,alpha).
    """
    # admissible n start at 2, so (n-1, alpha) is a valid frequency
    base = LatticeFrequency(1, 0)
    below = resonance_kpi5(base, LatticeFrequency(idx.n - 1, idx.alpha_index))
    above = resonance_kpi5(base, LatticeFrequency(idx.n + 1, idx.alpha_index))
    return -below, above


def _search_row(m1: int, max_m: int, max_k: int) -> List[Tuple[int, int, int, int]]:
    hits: List[Tuple[int, int, int, int]] = []
    for k1 in range(-max_k, max_k + 1):
        f1 = LatticeFrequency(m1, k1)
        for m2 in range(-max_m, max_m + 1):
            if m2 == 0 or m1 + m2 == 0:
                continue
            for k2 in range(-max_k, max_k + 1):
                if is_resonant_kpi5(f1, LatticeFrequency(m2, k2)):
                    hits.append((m1, k1, m2, k2))
    return hits


def resonance_search(max_m: int, max_k: int, workers: int = 1) -> List[ResonantPair]:
    """
    Every ordered pair (f1, f2) with |m| <= max_m, |k| <= max_k on which the KP-I
    resonance function vanishes.

    Rows (fixed m1) may be farmed out to a process pool; results are merged in row
    order, so the output does not depend on `workers`.
    """
    if max_m < 1 or max_k < 0:
        raise ParameterError(f"bounds must satisfy max_m >= 1, max_k >= 0 (got {max_m}, {max_k})")

    rows = [m for m in range(-max_m, max_m + 1) if m != 0]
    task = partial(_search_row, max_m=max_m, max_k=max_k)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(task, rows))
    else:
        chunks = [task(m) for m in rows]

    pairs: List[ResonantPair] = []
    for chunk in chunks:
        for m1, k1, m2, k2 in chunk:
            f1, f2 = LatticeFrequency(m1, k1), LatticeFrequency(m2, k2)
            # The integer test decides; the exact value must agree.
            if resonance_kpi5(f1, f2) != 0:
                raise ArithmeticError(f"integer test and exact Omega disagree on {f1}, {f2}")
            pairs.append((f1, f2))
    logger.info("resonance search |m|<=%d |k|<=%d: %d resonant pairs", max_m, max_k, len(pairs))
    return pairs


def all_pairs(max_m: int, max_k: int) -> List[ResonantPair]:
    """Every admissible ordered pair within bounds, resonant or not."""
    pairs: List[ResonantPair] = []
    for m1 in range(-max_m, max_m + 1):
        for m2 in range(-max_m, max_m + 1):
            if m1 == 0 or m2 == 0 or m1 + m2 == 0:
                continue
            for k1 in range(-max_k, max_k + 1):
                for k2 in range(-max_k, max_k + 1):
                    pairs.append((LatticeFrequency(m1, k1), LatticeFrequency(m2, k2)))
    return pairs
