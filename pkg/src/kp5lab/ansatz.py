"""
The approximate solutions u_{theta,n} and their equation residual.

    u_{theta,n}(t) = u1(t) + cos(theta t/2) n^-sigma cos phi_n + sin(theta t/2) n^-sigma sin phi_{n+1} + R

u1 is the KdV5 flow of theta n^-1 cos x (taken from a 1D trajectory at solver step
times); every other term is an explicit mode whose time derivative is exact.
"""

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import CORRECTORS, DEFAULT_DT_MAX, DEFAULT_TOLERANCES
from .evolve import EvolveConfig, Trajectory, embed_1d, evolve_1d_kdv5
from .exceptions import ParameterError
from .numtheory import AdmissibleIndex, admissible_index
from .resonance import LatticeFrequency, omega, omega_npm1
from .spectral import (
    LineField,
    LineGrid,
    SpectralField,
    TorusGrid,
    l2_norm,
    line_wave,
    product,
    x_derivative,
)

logger = logging.getLogger(__name__)

Envelope = Literal["cos", "sin", "one"]
Trig = Literal["cos", "sin"]


@dataclass(frozen=True)
class AnsatzParams:
    theta: float
    idx: AdmissibleIndex
    sigma: float = 2.0
    corrector: str = "matched"

    def __post_init__(self) -> None:
        if abs(self.theta) > 1:
            raise ParameterError(f"theta must lie in [-1, 1], got {self.theta}")
        if self.sigma < 2:
            raise ParameterError(f"sigma must be >= 2, got {self.sigma}")
        if self.corrector not in CORRECTORS:
            raise ParameterError(f"unknown corrector {self.corrector!r}; choose from {sorted(CORRECTORS)}")
        if self.corrector == "literal":
            logger.warning("literal corrector: amplitude carries no theta/2 factor, remainders are not cancelled")

    @property
    def amplitude(self) -> float:
        return float(self.idx.n) ** (-self.sigma)

    def with_theta(self, theta: float) -> "AnsatzParams":
        return AnsatzParams(theta=theta, idx=self.idx, sigma=self.sigma, corrector=self.corrector)


@dataclass(frozen=True)
class PhaseSpec:
    """Phase m x + lambda k y + omega_val t of a linear solution."""

    m: int
    k: int
    omega_val: Fraction

    def __post_init__(self) -> None:
        expected = omega(LatticeFrequency(self.m, self.k))
        if self.omega_val != expected:
            raise ParameterError(f"omega_val {self.omega_val} != omega({self.m}, {self.k}) = {expected}")

    @property
    def frequency(self) -> LatticeFrequency:
        return LatticeFrequency(self.m, self.k)


def phases(idx: Union[AdmissibleIndex, int]) -> Tuple[PhaseSpec, PhaseSpec, PhaseSpec]:
    """
    The phases phi_1, phi_n, phi_{n+1}.

    Raises:
        ParameterError: If an integer n is not admissible.
        ArithmeticError: If phi_1 + phi_n != phi_{n+1} (impossible for an admissible index).
    """
    if isinstance(idx, int):
        idx = admissible_index(idx)
    alpha = idx.alpha_index
    p1 = PhaseSpec(1, 0, omega(LatticeFrequency(1, 0)))
    pn = PhaseSpec(idx.n, alpha, omega(LatticeFrequency(idx.n, alpha)))
    pn1 = PhaseSpec(idx.n + 1, alpha, omega(LatticeFrequency(idx.n + 1, alpha)))
    if (p1.m + pn.m, p1.k + pn.k, p1.omega_val + pn.omega_val) != (pn1.m, pn1.k, pn1.omega_val):
        raise ArithmeticError(f"phase additivity fails for n={idx.n}: {p1} + {pn} != {pn1}")
    return p1, pn, pn1


@dataclass(frozen=True)
class ModeTerm:
    """amplitude * envelope(theta t/2) * trig(m x + lambda k y + nu t)."""

    label: str
    m: int
    k: int
    nu: Fraction
    amplitude: float
    envelope: Envelope
    trig: Trig

    def detuning(self) -> float:
        """nu - omega(m, k): zero for free waves."""
        return float(self.nu - omega(LatticeFrequency(self.m, self.k)))


def corrector_factor(p: AnsatzParams) -> float:
    if p.corrector == "literal":
        return 1.0
    return 0.5 * p.theta


def ansatz_terms(p: AnsatzParams) -> List[ModeTerm]:
    """The explicit (non-u1) modes of u_{theta,n} for the chosen corrector."""
    n, alpha = p.idx.n, p.idx.alpha_index
    p1, pn, pn1 = phases(p.idx)
    amp = p.amplitude
    terms = [
        ModeTerm("u2", n, alpha, pn.omega_val, amp, "cos", "cos"),
        ModeTerm("u3", n + 1, alpha, pn1.omega_val, amp, "sin", "sin"),
    ]
    if p.corrector == "none":
        return terms

    below, above = omega_npm1(p.idx)
    c = corrector_factor(p)
    r1 = c * amp / float(below)
    r2 = c * amp / float(above)
    terms += [
        ModeTerm("r1", n - 1, alpha, pn.omega_val - p1.omega_val, r1, "cos", "cos"),
        ModeTerm("r2", n + 2, alpha, pn1.omega_val + p1.omega_val, r2, "sin", "sin"),
    ]
    if p.corrector == "matched":
        # free wave cancelling r1 at t = 0
        free = omega(LatticeFrequency(n - 1, alpha))
        terms.append(ModeTerm("r1_free", n - 1, alpha, free, -r1, "one", "cos"))
    return terms


def _envelope(p: AnsatzParams, kind: Envelope, t: float) -> Tuple[float, float]:
    """(e(t), e'(t)) for the envelope of a term."""
    half = 0.5 * p.theta
    if kind == "cos":
        return math.cos(half * t), -half * math.sin(half * t)
    if kind == "sin":
        return math.sin(half * t), half * math.cos(half * t)
    return 1.0, 0.0


def check_phase_budget(nu: Fraction, t: float, budget: float = DEFAULT_TOLERANCES["phase_budget"]) -> None:
    """
    Refuses a time frequency whose phase nu t cannot be rounded to within `budget` rad.

    Raises:
        ParameterError: If |nu t| * machine epsilon > budget.
    """
    error = abs(float(nu)) * abs(t) * sys.float_info.epsilon
    if error > budget:
        raise ParameterError(
            f"time frequency {float(nu):.3e} at t={t:g} carries phase rounding {error:.1e} rad "
            f"> budget {budget:.0e}; this n is restricted to exact-arithmetic checks"
        )


def check_index_budget(idx: AdmissibleIndex, t_end: float, budget: float = DEFAULT_TOLERANCES["phase_budget"]) -> None:
    """Phase budget of the fastest ansatz mode, (n+2, alpha), over [0, t_end]."""
    _, _, pn1 = phases(idx)
    check_phase_budget(pn1.omega_val + 1, t_end, budget)


def _mode_coefficient(term: ModeTerm, t: float) -> complex:
    """Coefficient at (m, k) of trig(m x + lambda k y + nu t), before envelope and amplitude."""
    phase = float(term.nu) * t
    value = 0.5 * complex(math.cos(phase), math.sin(phase))
    return value if term.trig == "cos" else value / 1j


def _place(coefficients: np.ndarray, grid: TorusGrid, m: int, k: int, value: complex) -> None:
    grid.require(m, k)
    coefficients[grid.slot(m, k)] += value


def explicit_part(p: AnsatzParams, t: float, grid: TorusGrid, budget: Optional[float] = None) -> SpectralField:
    """Sum of the explicit modes at time t (everything except u1)."""
    budget = DEFAULT_TOLERANCES["phase_budget"] if budget is None else budget
    coefficients = np.zeros(grid.shape, dtype=complex)
    for term in ansatz_terms(p):
        check_phase_budget(term.nu, t, budget)
        e, _ = _envelope(p, term.envelope, t)
        _place(coefficients, grid, term.m, term.k, term.amplitude * e * _mode_coefficient(term, t))
    return SpectralField(coefficients, grid)


def linear_defect(p: AnsatzParams, t: float, grid: TorusGrid, budget: Optional[float] = None) -> SpectralField:
    """
    (d_t - L) of the explicit modes, in closed form:
    e'(t) T + e(t) i (nu - omega(m, k)) T per term T.
    """
    budget = DEFAULT_TOLERANCES["phase_budget"] if budget is None else budget
    coefficients = np.zeros(grid.shape, dtype=complex)
    for term in ansatz_terms(p):
        check_phase_budget(term.nu, t, budget)
        e, de = _envelope(p, term.envelope, t)
        base = term.amplitude * _mode_coefficient(term, t)
        _place(coefficients, grid, term.m, term.k, (de + 1j * e * term.detuning()) * base)
    return SpectralField(coefficients, grid)


def lowfreq_initial(theta: float, idx: AdmissibleIndex, nx: int) -> LineField:
    """theta n^-1 cos x on the circle."""
    return line_wave(LineGrid(nx=nx), 1, amplitude=theta / idx.n)


def lowfreq_trajectory(
    theta: float,
    idx: AdmissibleIndex,
    t_end: float = 1.0,
    dt: Optional[float] = None,
    nx: int = 64,
    dt_max: float = DEFAULT_DT_MAX,
) -> Trajectory:
    """KdV5 flow of theta n^-1 cos x with every step recorded."""
    u0 = lowfreq_initial(theta, idx, nx)
    cfg = EvolveConfig.auto(u0, t_end, dt_max, dt=dt, snapshot_every=1)
    cfg = replace(cfg, log_every=max(1, round(0.01 / cfg.dt)))
    return evolve_1d_kdv5(u0, cfg)


def _check_lowfreq(p: AnsatzParams, lowfreq: Trajectory) -> None:
    if not lowfreq.snapshots:
        return
    start = lowfreq.initial
    expected = 0.5 * p.theta / p.idx.n
    if not isinstance(start, LineField) or abs(start.coefficients[1] - expected) > 1e-12:
        raise ParameterError("low-frequency trajectory does not start from theta n^-1 cos x")


def build_ansatz(
    p: AnsatzParams, t: float, lowfreq: Trajectory, grid: TorusGrid, budget: Optional[float] = None
) -> SpectralField:
    """
    u_{theta,n}(t) on `grid`.

    Raises:
        ParameterError: If (n+2, alpha) falls outside the dealiased region, t is not a
            step time of `lowfreq`, or a phase exceeds the rounding budget.
    """
    _check_lowfreq(p, lowfreq)
    u1 = embed_1d(lowfreq.at(t), grid)  # type: ignore[arg-type]
    return u1 + explicit_part(p, t, grid, budget)


def initial_ansatz(p: AnsatzParams, grid: TorusGrid) -> SpectralField:
    """u_{theta,n}(0): u1(0) = theta n^-1 cos x is known exactly, no flow needed."""
    line = LineGrid(nx=grid.nx)
    u1 = embed_1d(line_wave(line, 1, amplitude=p.theta / p.idx.n), grid)
    return u1 + explicit_part(p, 0.0, grid)


def residual_field(
    p: AnsatzParams, t: float, lowfreq: Trajectory, grid: TorusGrid, budget: Optional[float] = None
) -> SpectralField:
    """
    G = (d_t - L) w + 1/2 d_x(w (2 u1 + w)) with w the explicit modes.

    u1 solves its own equation, so (d_t - L) u1 + u1 d_x u1 drops out. Products are
    taken on a 2x padded grid, exact for these band-limited factors.
    """
    _check_lowfreq(p, lowfreq)
    u1 = embed_1d(lowfreq.at(t), grid)  # type: ignore[arg-type]
    w = explicit_part(p, t, grid, budget)
    quadratic = product(w, u1 * 2.0 + w, mode="pad")
    return linear_defect(p, t, grid, budget) + x_derivative(quadratic, 1) * 0.5


def residual(
    p: AnsatzParams, t: float, lowfreq: Optional[Trajectory], grid: TorusGrid, budget: Optional[float] = None
) -> float:
    """||(d_t - L) u_{theta,n} + u_{theta,n} d_x u_{theta,n}||_{L2} at time t."""
    if lowfreq is None:
        lowfreq = lowfreq_trajectory(p.theta, p.idx, t_end=max(t, DEFAULT_DT_MAX))
    return l2_norm(residual_field(p, t, lowfreq, grid, budget))


def residual_series(
    p: AnsatzParams,
    times: Sequence[float],
    lowfreq: Trajectory,
    grid: TorusGrid,
    workers: int = 1,
    budget: Optional[float] = None,
) -> List[Tuple[float, float]]:
    """(t, residual) for each t; with workers > 1 the times run on a thread pool."""

    def task(t: float) -> Tuple[float, float]:
        return t, residual(p, t, lowfreq, grid, budget)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, times))
    return [task(t) for t in times]


def lemma_lowfreq_gap(
    theta: float, idx: AdmissibleIndex, t: float, lowfreq: Optional[Trajectory] = None, nx: int = 64
) -> float:
    """||Phi_t[theta n^-1 cos x] - theta n^-1 cos(x + t)||_{L2(T)}."""
    if abs(theta) > 1 or not 0 <= t <= 1:
        raise ParameterError(f"need |theta| <= 1 and t in [0, 1] (theta={theta}, t={t})")
    if lowfreq is None:
        if t == 0:
            return 0.0
        lowfreq = lowfreq_trajectory(theta, idx, t_end=t, nx=nx)
    state = lowfreq.at(t)
    linear = line_wave(state.grid, 1, amplitude=theta / idx.n, phase=t)  # type: ignore[arg-type]
    return l2_norm(state - linear)  # type: ignore[operator]


def lemma_lowfreq_gap_series(
    theta: float, idx: AdmissibleIndex, t_end: float = 1.0, dt: Optional[float] = None, nx: int = 64
) -> Tuple[List[Tuple[float, float]], float]:
    """Gap on every solver step time of [0, t_end], and its maximum."""
    lowfreq = lowfreq_trajectory(theta, idx, t_end=t_end, dt=dt, nx=nx)
    series = [(t, lemma_lowfreq_gap(theta, idx, t, lowfreq)) for t in lowfreq.snapshot_times]
    return series, max(g for _, g in series)
