"""
Integrating-factor RK4 for the fifth-order KP-I flow and its KdV5 reduction.

The linear part is applied as the exact phase exp(i omega dt); only the quadratic
nonlinearity -1/2 d_x(u^2) is discretized.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import DEFAULT_DT_MAX, DEFAULT_TOLERANCES, TRANSPORT_CFL
from .equations import BaseEquation, KdV5Equation, KP5Equation
from .exceptions import NumericalFailure, ParameterError
from .spectral import (
    LineField,
    SpectralField,
    TorusGrid,
    d0_defect,
    dealias,
    hermitian_defect,
    require_d0,
)
from .types import DriftSummary, NormReport

logger = logging.getLogger(__name__)

Field = Union[SpectralField, LineField]

# times closer than this are the same solver step
TIME_MATCH = 1e-9


@dataclass(frozen=True)
class EvolveConfig:
    """
    Time-stepping parameters.

    The run takes `steps` equal steps of `step_dt` = t_end / steps <= dt.
    """

    dt: float
    t_end: float
    log_every: int = 1
    conserve_check: bool = False
    nonlinear: bool = True
    snapshot_every: int = 0
    sigma: float = 2.0
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self) -> None:
        if not (self.dt > 0 and self.t_end > 0):
            raise ParameterError(f"dt and t_end must be positive (dt={self.dt}, t_end={self.t_end})")
        if self.dt > self.t_end:
            raise ParameterError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.log_every < 1 or self.snapshot_every < 0:
            raise ParameterError("log_every must be >= 1 and snapshot_every >= 0")
        if self.sigma < 2:
            raise ParameterError(f"sigma must be >= 2, got {self.sigma}")

    @property
    def steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def step_dt(self) -> float:
        return self.t_end / self.steps

    def tolerance(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    @classmethod
    def auto(
        cls,
        starts: Union[Field, Sequence[Field]],
        t_end: float,
        dt_max: float = DEFAULT_DT_MAX,
        dt: Optional[float] = None,
        **kwargs: object,
    ) -> "EvolveConfig":
        """
        Config whose dt obeys the step-size rule for every start field, capped at dt_max and t_end.

        An explicit `dt` is taken as given; `evolve` still refuses it when it breaks the
        transport bound.
        """
        if dt is None:
            fields = [starts] if isinstance(starts, (SpectralField, LineField)) else list(starts)
            if not fields:
                raise ParameterError("auto needs at least one start field")
            dt = min(min(stable_dt(u, dt_max) for u in fields), t_end)
        return cls(dt=float(dt), t_end=t_end, **kwargs)  # type: ignore[arg-type]


def equation_for(u: Field) -> BaseEquation:
    if isinstance(u, SpectralField):
        return KP5Equation(u.grid)
    if isinstance(u, LineField):
        return KdV5Equation(u.grid)
    raise ParameterError(f"no equation for {type(u).__name__}")


def stable_dt(u: Field, dt_max: float = DEFAULT_DT_MAX, cfl: float = TRANSPORT_CFL) -> float:
    """dt = min(dt_max, cfl / (max|u| m_max))."""
    equation = equation_for(u)
    return min(dt_max, equation.transport_dt(u.coefficients, cfl))


class IntegratingFactorRK4:
    """One-step map of the integrating-factor RK4 scheme for a fixed dt."""

    def __init__(self, equation: BaseEquation, dt: float, nonlinear: bool = True) -> None:
        self.equation = equation
        self.dt = dt
        self.nonlinear = nonlinear
        self.half = np.exp(0.5j * equation.omega * dt)
        self.full = np.exp(1j * equation.omega * dt)

    def step(self, c: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return self.full * c
        n, h = self.equation.nonlinear, self.dt
        k1 = n(c)
        k2 = n(self.half * (c + 0.5 * h * k1))
        k3 = n(self.half * c + 0.5 * h * k2)
        k4 = n(self.full * c + h * self.half * k3)
        return self.full * c + (h / 6.0) * (self.full * k1 + 2.0 * self.half * (k2 + k3) + k4)


def step_if_rk4(u: Field, dt: float, nonlinear: bool = True, tolerance: Optional[float] = None) -> Field:
    """
    One integrating-factor RK4 step of size dt.

    Raises:
        ConstraintViolation: If u has energy on m = 0.
        NumericalFailure: If the step breaks the D0' or Hermitian invariant.
    """
    require_d0(u)
    equation = equation_for(u)
    stepped = u.with_coefficients(IntegratingFactorRK4(equation, dt, nonlinear).step(u.coefficients))
    _check_invariants(stepped, DEFAULT_TOLERANCES["invariant"] if tolerance is None else tolerance, 0.0)
    return stepped


def _check_invariants(u: Field, tolerance: float, t: float) -> None:
    if not np.all(np.isfinite(u.coefficients)):
        raise NumericalFailure(f"non-finite coefficients at t={t:.6g}")
    hermitian = hermitian_defect(u)
    d0 = d0_defect(u)
    if hermitian > tolerance or d0 > tolerance:
        raise NumericalFailure(
            f"step rejected at t={t:.6g}: Hermitian defect {hermitian:.2e}, D0' defect {d0:.2e} "
            f"(tolerance {tolerance:.1e})"
        )


@dataclass
class Trajectory:
    """
    Recorded evolution: norms every `log_every` steps, states every `snapshot_every` steps.

    `times` and `norm_history` are aligned; so are `snapshot_times` and `snapshots`.
    """

    dt: float
    times: List[float] = field(default_factory=list)
    norm_history: List[NormReport] = field(default_factory=list)
    snapshot_times: List[float] = field(default_factory=list)
    snapshots: List[Field] = field(default_factory=list)
    final: Optional[Field] = None

    @property
    def initial(self) -> Field:
        if not self.snapshots:
            raise ParameterError("trajectory holds no snapshots")
        return self.snapshots[0]

    def at(self, t: float) -> Field:
        """State at a recorded step time (matched to within TIME_MATCH)."""
        i = bisect.bisect_left(self.snapshot_times, t - TIME_MATCH)
        if i < len(self.snapshot_times) and abs(self.snapshot_times[i] - t) <= TIME_MATCH:
            return self.snapshots[i]
        if self.final is not None and self.times and abs(self.times[-1] - t) <= TIME_MATCH:
            return self.final
        raise ParameterError(
            f"t={t} is not a recorded step time (dt={self.dt}); residuals are only taken at step times"
        )

    def covers(self, t: float) -> bool:
        try:
            self.at(t)
        except ParameterError:
            return False
        return True

    def drift(self) -> DriftSummary:
        return drift_of(self.norm_history)


def drift_of(history: List[NormReport]) -> DriftSummary:
    """Largest relative L2 and Hamiltonian deviation from the first entry."""
    if not history:
        return {"l2_drift": 0.0, "hamiltonian_drift": 0.0}
    l2_0 = history[0]["l2"]
    h_0 = history[0]["hamiltonian"]
    l2_scale = l2_0 if l2_0 else 1.0
    h_scale = abs(h_0) if h_0 else 1.0
    return {
        "l2_drift": max(abs(r["l2"] - l2_0) for r in history) / l2_scale,
        "hamiltonian_drift": max(abs(r["hamiltonian"] - h_0) for r in history) / h_scale,
    }


def iterate(u0: Field, cfg: EvolveConfig) -> Iterator[Tuple[int, float, Field]]:
    """
    Yields (step, t, state) for step = 0..cfg.steps, t = step * cfg.step_dt.

    Every produced state has passed the finiteness, invariant and blow-up checks.

    Raises:
        ParameterError: If dt exceeds the transport bound of u0 (nonlinear runs).
        NumericalFailure: On NaN, a rejected step, or norm growth beyond the blow-up factor.
    """
    require_d0(u0, cfg.tolerance("constraint"))
    equation = equation_for(u0)
    start = dealias(u0)
    if not np.array_equal(start.coefficients, u0.coefficients):
        logger.debug("initial data truncated to the dealiased region")

    dt = cfg.step_dt
    if cfg.nonlinear:
        bound = equation.transport_dt(start.coefficients, TRANSPORT_CFL)
        if dt > bound * (1 + 1e-12):
            raise ParameterError(
                f"dt={dt:.3e} exceeds the transport bound {bound:.3e} = "
                f"{TRANSPORT_CFL}/(max|u| m_max) for this initial data"
            )

    scheme = IntegratingFactorRK4(equation, dt, cfg.nonlinear)
    invariant_tol = cfg.tolerance("invariant")
    blowup = cfg.tolerance("blowup_factor")
    energy_0 = float(np.sum(equation.grid.weights * np.abs(start.coefficients) ** 2))

    c = start.coefficients
    yield 0, 0.0, start
    for step in range(1, cfg.steps + 1):
        t = step * dt
        c = scheme.step(c)
        state = equation.wrap(c)
        _check_invariants(state, invariant_tol, t)
        energy = float(np.sum(equation.grid.weights * np.abs(c) ** 2))
        if energy_0 > 0 and energy > (blowup**2) * energy_0:
            raise NumericalFailure(
                f"{equation.name}: L2 norm grew by {math.sqrt(energy / energy_0):.3g}x at t={t:.6g} "
                f"(limit {blowup:g}x); reduce dt"
            )
        yield step, t, state


def _evolve(u0: Field, cfg: EvolveConfig) -> Trajectory:
    equation = equation_for(u0)
    trajectory = Trajectory(dt=cfg.step_dt)
    l2_tol = cfg.tolerance("l2_drift")
    constraint = cfg.tolerance("constraint")

    for step, t, state in iterate(u0, cfg):
        last = step == cfg.steps
        if step % cfg.log_every == 0 or last:
            report = equation.invariants(state.coefficients, cfg.sigma, constraint)
            trajectory.times.append(t)
            trajectory.norm_history.append(report)
            logger.debug("%s t=%.4f l2=%.12g H=%.12g", equation.name, t, report["l2"], report["hamiltonian"])
            if cfg.conserve_check:
                drift = trajectory.drift()["l2_drift"]
                if drift > l2_tol:
                    raise NumericalFailure(
                        f"{equation.name}: L2 drift {drift:.3e} at t={t:.6g} exceeds {l2_tol:.1e}"
                    )
        if cfg.snapshot_every and (step % cfg.snapshot_every == 0 or last):
            trajectory.snapshot_times.append(t)
            trajectory.snapshots.append(state)
        if last:
            trajectory.final = state

    drift = trajectory.drift()
    logger.info(
        "%s: %d steps of %.3e to t=%.4g, L2 drift %.2e, H drift %.2e",
        equation.name,
        cfg.steps,
        cfg.step_dt,
        cfg.t_end,
        drift["l2_drift"],
        drift["hamiltonian_drift"],
    )
    return trajectory


def evolve(u0: SpectralField, cfg: EvolveConfig) -> Trajectory:
    """Integrates the fifth-order KP-I equation from u0 to cfg.t_end."""
    if not isinstance(u0, SpectralField):
        raise ParameterError("evolve takes a torus field; use evolve_1d_kdv5 on the circle")
    return _evolve(u0, cfg)


def evolve_1d_kdv5(u0: LineField, cfg: EvolveConfig) -> Trajectory:
    """Integrates d_t u = d_x^5 u - u d_x u on T from u0 to cfg.t_end."""
    if not isinstance(u0, LineField):
        raise ParameterError("evolve_1d_kdv5 takes a circle field")
    return _evolve(u0, cfg)


def embed_1d(u: LineField, grid: TorusGrid) -> SpectralField:
    """Places a circle field on the k = 0 row of the torus: a y-independent field."""
    coefficients = np.zeros(grid.shape, dtype=complex)
    count = min(u.grid.nx, grid.nx) // 2
    coefficients[:count, 0] = u.coefficients[:count]
    dropped = float(np.sum(np.abs(u.coefficients[count:]) ** 2))
    if dropped:
        logger.debug("embed_1d dropped modes m >= %d carrying %.3e", count, dropped)
    return SpectralField(coefficients, grid)
