"""
Exact integer machinery behind the choice of the torus period.

The resonance condition for the pair (1, 0), (n, alpha(n)) has the solution
alpha(n) = n(n+1) sqrt(5(n^2+n+1)). On T x (1/lambda)T with lambda = sqrt(35)
this is a lattice point exactly when n^2 + n + 1 = 7 n1^2, i.e. when
X = 2n+1, Y = 2 n1 solves X^2 - 7 Y^2 = -3.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional

from .constants import ADMISSIBILITY_CONDITION, HYPERBOLA_RHS, PELL_ELL
from .exceptions import ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PellSolution:
    """An integer point of X^2 - ell Y^2 = -3."""

    X: int
    Y: int
    ell: int

    def __post_init__(self) -> None:
        if self.X * self.X - self.ell * self.Y * self.Y != HYPERBOLA_RHS:
            raise ParameterError(
                f"({self.X}, {self.Y}) does not solve X^2 - {self.ell} Y^2 = {HYPERBOLA_RHS}"
            )


@dataclass(frozen=True)
class FundamentalUnit:
    """The minimal solution u, v > 0 of u^2 - ell v^2 = 1."""

    u: int
    v: int
    ell: int

    def __post_init__(self) -> None:
        if self.u * self.u - self.ell * self.v * self.v != 1 or self.u <= 1 or self.v <= 0:
            raise ParameterError(f"({self.u}, {self.v}) is not a Pell unit for ell={self.ell}")


@dataclass(frozen=True)
class AdmissibleIndex:
    """An index n whose resonant partner alpha(n) = lambda * alpha_index lies on the lattice."""

    n: int
    n1: int
    alpha_index: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.n1 < 1:
            raise ParameterError(f"n={self.n}, n1={self.n1} must be positive")
        if self.n * self.n + self.n + 1 != PELL_ELL * self.n1 * self.n1:
            raise ParameterError(
                f"n={self.n} is not admissible: {ADMISSIBILITY_CONDITION} has no witness n1={self.n1}"
            )
        if self.alpha_index != self.n * (self.n + 1) * self.n1:
            raise ParameterError(
                f"alpha_index must be n(n+1)n1 = {self.n * (self.n + 1) * self.n1}, got {self.alpha_index}"
            )

    @classmethod
    def from_witness(cls, n: int, n1: int) -> "AdmissibleIndex":
        return cls(n=n, n1=n1, alpha_index=n * (n + 1) * n1)


def is_perfect_square(value: int) -> bool:
    if value < 0:
        return False
    root = math.isqrt(value)
    return root * root == value


def pell_fundamental(ell: int) -> FundamentalUnit:
    """
    Fundamental solution of u^2 - ell v^2 = 1 from the continued fraction of sqrt(ell).

    The convergents h/k of sqrt(ell) are scanned until h^2 - ell k^2 = 1; the first
    hit has the smallest u > 1.

    Args:
        ell (int): A non-square integer >= 2.

    Returns:
        FundamentalUnit: The minimal (u, v).

    Raises:
        ParameterError: If ell < 2 or ell is a perfect square.
    """
    if ell < 2:
        raise ParameterError(f"ell must be >= 2, got {ell}")
    if is_perfect_square(ell):
        raise ParameterError(f"ell={ell} is a perfect square; Pell's equation has no unit")

    a0 = math.isqrt(ell)
    m, d, a = 0, 1, a0
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    while h * h - ell * k * k != 1:
        m = d * a - m
        d = (ell - m * m) // d
        a = (a0 + m) // d
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    logger.debug("fundamental unit for ell=%d: (%d, %d)", ell, h, k)
    return FundamentalUnit(u=h, v=k, ell=ell)


def compose(solution: PellSolution, unit: FundamentalUnit) -> PellSolution:
    """(X + Y sqrt(ell)) (u + v sqrt(ell)) stays on X^2 - ell Y^2 = -3."""
    if solution.ell != unit.ell:
        raise ParameterError(f"ell mismatch: {solution.ell} vs {unit.ell}")
    ell = unit.ell
    return PellSolution(
        X=solution.X * unit.u + ell * solution.Y * unit.v,
        Y=solution.X * unit.v + solution.Y * unit.u,
        ell=ell,
    )


def _seed_orderings(X0: int, Y0: int, ell: int) -> List[PellSolution]:
    """Both readings (X0, Y0) and (Y0, X0) of a seed, keeping those on the hyperbola."""
    seeds: List[PellSolution] = []
    for X, Y in ((X0, Y0), (Y0, X0)):
        if X * X - ell * Y * Y == HYPERBOLA_RHS:
            seeds.append(PellSolution(X=X, Y=Y, ell=ell))
        else:
            logger.debug("seed ordering (%d, %d) is off the hyperbola; skipped", X, Y)
    return seeds


def hyperbola_seeds(ell: int, unit: Optional[FundamentalUnit] = None) -> List[PellSolution]:
    """
    One representative of every solution class of X^2 - ell Y^2 = -3.

    Fundamental solutions of a negative norm equation satisfy
    0 < Y <= sqrt(3 (u + 1) / (2 ell)); each found (X, Y) contributes itself and its
    conjugate class (-X, Y).
    """
    unit = unit or pell_fundamental(ell)
    bound = math.isqrt(3 * (unit.u + 1) // (2 * ell)) + 1
    seeds: List[PellSolution] = []
    for Y in range(1, bound + 1):
        square = ell * Y * Y + HYPERBOLA_RHS
        if not is_perfect_square(square):
            continue
        X = math.isqrt(square)
        for candidate in _seed_orderings(X, Y, ell) + _seed_orderings(-X, Y, ell):
            if candidate not in seeds:
                seeds.append(candidate)
    return seeds


def _class_stream(seed: PellSolution, unit: FundamentalUnit) -> Iterator[PellSolution]:
    """Positive solutions seed * unit^k, k = 0, 1, ..., in increasing order."""
    current = seed
    while True:
        if current.X > 0 and current.Y > 0:
            yield current
        current = compose(current, unit)


def _to_index(solution: PellSolution) -> Optional[AdmissibleIndex]:
    if solution.X % 2 == 1 and solution.Y % 2 == 0:
        return AdmissibleIndex.from_witness((solution.X - 1) // 2, solution.Y // 2)
    return None


def generate_admissible(count: int) -> List[AdmissibleIndex]:
    """
    The first `count` admissible n, in increasing order.

    Solutions of X^2 - 7Y^2 = -3 are generated class by class (seed times powers of
    the unit (8, 3)); those with X odd and Y even map to n = (X-1)/2, n1 = Y/2.

    Args:
        count (int): How many indices to return (>= 1).

    Returns:
        List[AdmissibleIndex]: Indices sorted by n.
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")

    unit = pell_fundamental(PELL_ELL)
    streams = [_class_stream(seed, unit) for seed in hyperbola_seeds(PELL_ELL, unit)]
    heads = [next(stream) for stream in streams]
    found: List[AdmissibleIndex] = []
    seen = set()

    # k-way merge on X; every stream is strictly increasing
    while len(found) < count:
        i = min(range(len(heads)), key=lambda j: heads[j].X)
        head = heads[i]
        heads[i] = next(streams[i])
        if (head.X, head.Y) in seen:
            continue
        seen.add((head.X, head.Y))
        index = _to_index(head)
        if index is not None:
            found.append(index)
    return found


def brute_force_admissible(limit: int) -> List[AdmissibleIndex]:
    """Independent oracle: scan n = 1..limit for n^2 + n + 1 = 7 * square."""
    found: List[AdmissibleIndex] = []
    for n in range(1, limit + 1):
        value = n * n + n + 1
        if value % PELL_ELL:
            continue
        quotient = value // PELL_ELL
        if is_perfect_square(quotient):
            found.append(AdmissibleIndex.from_witness(n, math.isqrt(quotient)))
    return found


def admissible_index(n: int) -> AdmissibleIndex:
    """
    Validates a user-supplied n.

    Raises:
        ParameterError: Naming the admissibility condition when n fails it.
    """
    value = n * n + n + 1
    if n < 1 or value % PELL_ELL or not is_perfect_square(value // PELL_ELL):
        raise ParameterError(
            f"n={n} is not admissible: {ADMISSIBILITY_CONDITION} has no integer solution n1"
        )
    return AdmissibleIndex.from_witness(n, math.isqrt(value // PELL_ELL))
