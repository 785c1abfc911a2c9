import cmath

import numpy as np
import pytest

from kp5lab.ansatz import AnsatzParams, initial_ansatz
from kp5lab.evolve import (
    EvolveConfig,
    embed_1d,
    evolve,
    evolve_1d_kdv5,
    iterate,
    stable_dt,
    step_if_rk4,
)
from kp5lab.exceptions import ConstraintViolation, NumericalFailure, ParameterError
from kp5lab.numtheory import admissible_index
from kp5lab.spectral import LineGrid, SpectralField, TorusGrid, dealias, l2_norm, line_wave, plane_wave, project_d0


def _final(u0: SpectralField, dt: float, t_end: float, nonlinear: bool = True) -> SpectralField:
    *_, (_, _, state) = iterate(u0, EvolveConfig(dt=dt, t_end=t_end, nonlinear=nonlinear))
    return state  # type: ignore[return-value]


def test_config_rounds_to_equal_steps() -> None:
    """
    t_end is split into the fewest equal steps no longer than dt.

    Returns:
        None
    """
    cfg = EvolveConfig(dt=0.3, t_end=1.0)
    assert cfg.steps == 4
    assert cfg.step_dt == pytest.approx(0.25)
    assert EvolveConfig(dt=0.001, t_end=1.0).steps == 1000
    with pytest.raises(ParameterError):
        EvolveConfig(dt=2.0, t_end=1.0)
    with pytest.raises(ParameterError):
        EvolveConfig(dt=0.1, t_end=1.0, sigma=1.0)


def test_linear_flow_is_exact_for_one_mode() -> None:
    """
    Without the nonlinearity a plane wave only picks up the phase exp(i omega t).

    Returns:
        None
    """
    grid = TorusGrid(16, 16)
    u0 = plane_wave(grid, 2, 1)
    final = _final(u0, 0.05, 0.5, nonlinear=False)
    omega = 2**5 + grid.lam**2 / 2
    assert abs(final.coefficient(2, 1) - 0.5 * cmath.exp(0.5j * omega)) < 1e-12


def test_linear_flow_is_exact_for_random_data() -> None:
    """
    The linear propagator matches exp(i omega t) on every mode of a random D0' field.

    Returns:
        None
    """
    grid = TorusGrid(16, 16)
    rng = np.random.default_rng(7)
    u0 = project_d0(dealias(SpectralField.from_physical(rng.standard_normal((16, 16)), grid)))
    final = _final(u0, 0.01, 0.3, nonlinear=False)
    m, ky = grid.m, (grid.lam * grid.k) ** 2
    omega = np.where(m > 0, np.where(m > 0, m, 1.0) ** 5 + ky / np.where(m > 0, m, 1.0), 0.0)
    expected = u0.coefficients * np.exp(1j * omega * 0.3)
    assert np.max(np.abs(final.coefficients - expected)) < 1e-10


def test_scheme_is_fourth_order() -> None:
    """
    Successive step halvings shrink the self-convergence error by about 16.

    Returns:
        None
    """
    grid = TorusGrid(8, 8)
    u0 = plane_wave(grid, 1, 0, amplitude=0.1)
    coarse, mid, fine = (_final(u0, dt, 0.5) for dt in (0.005, 0.0025, 0.00125))
    ratio = l2_norm(coarse - mid) / l2_norm(mid - fine)
    assert 12 <= ratio <= 20


def test_single_step_is_fifth_order() -> None:
    """
    One step's local error drops by about 32 when dt halves.

    Returns:
        None
    """
    grid = TorusGrid(8, 8)
    u0 = plane_wave(grid, 1, 0, amplitude=0.1)

    def local_error(dt: float) -> float:
        one = step_if_rk4(u0, dt)
        reference = _final(u0, dt / 16, dt)
        return l2_norm(one - reference)  # type: ignore[operator]

    ratio = local_error(0.01) / local_error(0.005)
    assert 20 <= ratio <= 44


def test_conservation_on_resonant_data() -> None:
    """
    L2 and the Hamiltonian are conserved along the n = 2 flow on [0, 1] at the default step.

    Returns:
        None
    """
    idx = admissible_index(2)
    grid = TorusGrid.for_index(idx)
    u0 = initial_ansatz(AnsatzParams(theta=1.0, idx=idx), grid)
    cfg = EvolveConfig.auto(u0, 1.0, log_every=10, conserve_check=True)
    assert cfg.dt == pytest.approx(1e-3)
    trajectory = evolve(u0, cfg)
    drift = trajectory.drift()
    assert drift["l2_drift"] < 1e-8
    assert drift["hamiltonian_drift"] < 1e-6
    assert trajectory.times[-1] == pytest.approx(1.0)
    assert len(trajectory.times) == 101


def test_auto_config_takes_the_strictest_start() -> None:
    """
    auto picks the smallest step-size bound over its start fields, capped at t_end.

    Returns:
        None
    """
    grid = TorusGrid(16, 16)
    small = plane_wave(grid, 1, 0, amplitude=0.1)
    big = plane_wave(grid, 1, 0, amplitude=100.0)
    assert EvolveConfig.auto(small, 1.0).dt == pytest.approx(1e-3)
    assert EvolveConfig.auto([small, big], 1.0).dt == pytest.approx(stable_dt(big))
    assert EvolveConfig.auto(small, 5e-4).dt == pytest.approx(5e-4)
    assert EvolveConfig.auto(big, 1.0, dt=0.01).dt == 0.01
    assert EvolveConfig.auto(small, 1.0, sigma=3.0).sigma == 3.0
    with pytest.raises(ParameterError):
        EvolveConfig.auto([], 1.0)


def test_line_flow_agrees_with_embedded_torus_flow() -> None:
    """
    A y-independent torus field evolves exactly like the same field on the circle.

    Returns:
        None
    """
    line = LineGrid(16)
    u = line_wave(line, 1, amplitude=0.1) + line_wave(line, 2, amplitude=0.05, kind="sin")
    cfg = EvolveConfig(dt=0.002, t_end=0.2, snapshot_every=25)
    line_run = evolve_1d_kdv5(u, cfg)
    torus = TorusGrid(16, 8)
    torus_run = evolve(embed_1d(u, torus), cfg)
    assert line_run.final is not None and torus_run.final is not None
    gap = embed_1d(line_run.final, torus) - torus_run.final  # type: ignore[arg-type, operator]
    assert np.max(np.abs(gap.coefficients)) < 1e-12
    assert line_run.snapshot_times == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2])


def test_trajectory_lookup_by_step_time() -> None:
    """
    States are found at step times and refused elsewhere.

    Returns:
        None
    """
    u = line_wave(LineGrid(16), 1, amplitude=0.1)
    run = evolve_1d_kdv5(u, EvolveConfig(dt=0.01, t_end=0.1, snapshot_every=1))
    assert run.covers(0.03)
    assert not run.covers(0.035)
    with pytest.raises(ParameterError, match="step time"):
        run.at(0.035)


def test_rejects_mean_and_oversized_steps() -> None:
    """
    Data with x-mean and steps above the transport bound are refused up front.

    Returns:
        None
    """
    grid = TorusGrid(16, 16)
    with pytest.raises(ConstraintViolation):
        next(iterate(plane_wave(grid, 0, 1), EvolveConfig(dt=0.01, t_end=0.1)))
    big = plane_wave(grid, 1, 0, amplitude=100.0)
    assert stable_dt(big) < 0.01
    with pytest.raises(ParameterError, match="transport bound"):
        next(iterate(big, EvolveConfig(dt=0.01, t_end=0.1)))


def test_numerical_failures() -> None:
    """
    Non-finite states and norm growth past the blow-up factor abort the run.

    Returns:
        None
    """
    grid = TorusGrid(8, 8)
    coefficients = plane_wave(grid, 1, 0).coefficients.copy()
    coefficients[2, 1] = np.nan
    with pytest.raises(NumericalFailure, match="non-finite"):
        list(iterate(SpectralField(coefficients, grid), EvolveConfig(dt=0.01, t_end=0.05, nonlinear=False)))

    tight = {"blowup_factor": 0.5}
    with pytest.raises(NumericalFailure, match="grew"):
        list(iterate(plane_wave(grid, 1, 0, amplitude=0.1), EvolveConfig(dt=0.01, t_end=0.05, tolerances=tight)))


def test_evolve_checks_field_kind() -> None:
    """
    evolve takes torus fields and evolve_1d_kdv5 circle fields.

    Returns:
        None
    """
    with pytest.raises(ParameterError):
        evolve(line_wave(LineGrid(16), 1), EvolveConfig(dt=0.1, t_end=0.1))  # type: ignore[arg-type]
    with pytest.raises(ParameterError):
        evolve_1d_kdv5(plane_wave(TorusGrid(8, 8), 1, 0), EvolveConfig(dt=0.1, t_end=0.1))  # type: ignore[arg-type]
