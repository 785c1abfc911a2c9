import logging
import os
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import scipy.fft
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .ansatz import AnsatzParams, build_ansatz, initial_ansatz, lowfreq_trajectory, residual_series
from .config import Config, load_config, merge_overrides
from .constants import CORRECTORS, EXIT_NUMERICAL_FAILURE, EXIT_PARAMETER_ERROR, PELL_ELL, RESIDUAL_TIMES
from .evolve import EvolveConfig, evolve
from .exceptions import NumericalFailure, ParameterError
from .lab import EXPERIMENTS, run_experiment, run_manifest
from .numtheory import admissible_index, generate_admissible, hyperbola_seeds, pell_fundamental
from .report import csv_text, format_value, write_csv
from .resonance import (
    all_pairs,
    omega_npm1,
    resonance_kpi5,
    resonance_kpii,
    resonance_search,
)
from .snapshot import write_snapshot
from .spectral import TorusGrid
from .types import ExperimentManifest

console = Console(stderr=True)
logger = logging.getLogger(__name__)


# --- CLI DEFINITION ---
class LabGroup(click.Group):
    """Maps lab errors onto exit codes: 2 for bad parameters, 3 for numerical failure."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except ParameterError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_PARAMETER_ERROR)
        except NumericalFailure as e:
            click.echo(f"Numerical failure: {e}", err=True)
            sys.exit(EXIT_NUMERICAL_FAILURE)


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@click.group(cls=LabGroup)
@click.version_option(version=__version__, prog_name="kp5lab", message="%(prog)s version %(version)s")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--threads", type=int, help="FFT workers (default 1, deterministic).")
@click.option("--config-dir", default=".", type=click.Path(exists=True), help="Where pyproject.toml is read from.")
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for every logged step.")
@click.pass_context
def cli(ctx: click.Context, out_dir: Optional[str], threads: Optional[int], config_dir: str, verbose: int) -> None:
    """Resonant ill-posedness laboratory for fifth-order KP-I on T x (1/sqrt(35))T."""
    _setup_logging(verbose)
    config = merge_overrides(load_config(config_dir), {"out_dir": out_dir, "threads": threads})
    workers = int(config.get("threads", 1))
    if workers < 1:
        raise ParameterError(f"--threads must be >= 1, got {workers}")
    ctx.ensure_object(dict)
    ctx.obj["config"] = config
    ctx.with_resource(scipy.fft.set_workers(workers))


def _config(ctx: click.Context) -> Config:
    return ctx.obj["config"]


# --- HELPERS ---


def _grid_for(config: Config, n: int, grid: Optional[Tuple[int, int]]) -> TorusGrid:
    fraction = Fraction(str(config.get("dealias_fraction", "2/3")))
    if grid:
        return TorusGrid(nx=grid[0], ny=grid[1], dealias_fraction=fraction)
    return TorusGrid.for_index(admissible_index(n), dealias_fraction=fraction)


def _parse_times(text: str) -> List[float]:
    try:
        times = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ParameterError(f"--times must be comma-separated numbers, got {text!r}") from None
    if not times or min(times) < 0:
        raise ParameterError(f"--times must be non-negative, got {text!r}")
    return times


def _step_for(times: Sequence[float], dt: float) -> float:
    """dt if every t is a multiple of it (solver step times), else a ParameterError."""
    for t in times:
        if abs(t / dt - round(t / dt)) > 1e-6:
            raise ParameterError(f"t={t} is not a multiple of dt={dt}; residuals are taken at step times")
    return dt


def _print_summary(manifest: ExperimentManifest) -> None:
    table = Table(title=f"{manifest['experiment_name']} (kp5lab {manifest['artifact_version']})")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in sorted(manifest["summary_metrics"].items()):
        table.add_row(key, format_value(value))
    console.print(table)
    for path in manifest["outputs"]:
        console.print(f"[green]wrote[/green] {path}")


corrector_option = click.option(
    "--corrector", type=click.Choice(sorted(CORRECTORS)), help="Corrector variant (default from config)."
)


# --- COMMANDS ---


@cli.command()
@click.option("--ell", default=PELL_ELL, show_default=True, help="Pell coefficient.")
@click.option("--count", default=3, show_default=True, help="How many admissible n.")
@click.option("--with-omega", is_flag=True, help="Also print Omega_{n-1}, Omega_{n+1} and their ratio to n^3.")
def pell(ell: int, count: int, with_omega: bool) -> None:
    """Admissible indices n (n^2 + n + 1 = 7 n1^2) as CSV on stdout."""
    if ell != PELL_ELL:
        unit = pell_fundamental(ell)
        listing = [["unit", unit.u, unit.v]] + [["seed", s.X, s.Y] for s in hyperbola_seeds(ell, unit)]
        click.echo(csv_text(["kind", "X", "Y"], listing), nl=False)
        return

    header = ["n", "n1", "alpha_index"]
    rows: List[List[Any]] = []
    for idx in generate_admissible(count):
        row: List[Any] = [idx.n, idx.n1, idx.alpha_index]
        if with_omega:
            below, above = omega_npm1(idx)
            cube = idx.n**3
            row += [below, above, float(abs(below) / cube), float(abs(above) / cube)]
        rows.append(row)
    if with_omega:
        header += ["omega_below", "omega_above", "ratio_below", "ratio_above"]
    click.echo(csv_text(header, rows), nl=False)


@cli.command()
@click.option("--max-m", required=True, type=int)
@click.option("--max-k", required=True, type=int)
@click.option("--symbol", type=click.Choice(["kpi5", "kpii"]), default="kpi5", show_default=True)
@click.option("--all", "every", is_flag=True, help="Every pair with its Omega, not only the zeros.")
@click.pass_context
def resonance(ctx: click.Context, max_m: int, max_k: int, symbol: str, every: bool) -> None:
    """Resonant frequency pairs as CSV (m1,k1,m2,k2,omega_num,omega_den)."""
    function = resonance_kpi5 if symbol == "kpi5" else resonance_kpii
    if every:
        if max_m < 1 or max_k < 0:
            raise ParameterError("bounds must satisfy max_m >= 1, max_k >= 0")
        pairs = all_pairs(max_m, max_k)
    elif symbol == "kpi5":
        pairs = resonance_search(max_m, max_k, workers=int(_config(ctx).get("threads", 1)))
    else:
        # KP-II has no resonances: |Omega~| >= |m1 m2 (m1 + m2)| > 0
        pairs = []
    rows = []
    for f1, f2 in pairs:
        value = function(f1, f2)
        rows.append([f1.m, f1.k, f2.m, f2.k, value.numerator, value.denominator])
    click.echo(csv_text(["m1", "k1", "m2", "k2", "omega_num", "omega_den"], rows), nl=False)


@cli.command(name="evolve")
@click.option("--n", "n", required=True, type=int, help="Admissible index.")
@click.option("--sigma", type=float)
@click.option("--theta", default=1.0, show_default=True, type=float)
@click.option("--t-end", default=1.0, show_default=True, type=float)
@click.option("--dt", type=float, help="Time step (default: step-size rule).")
@click.option("--grid", nargs=2, type=int, help="NX NY (default: sizing rule).")
@click.option("--log-every", default=10, show_default=True, type=int)
@click.option("--snapshot-every", default=0, show_default=True, type=int, help="Write KP5LAB1 snapshots every K steps.")
@click.option("--linear", is_flag=True, help="Disable the nonlinearity.")
@click.option("--conserve-check", is_flag=True, help="Fail when L2 drifts beyond tolerance.")
@corrector_option
@click.pass_context
def evolve_command(
    ctx: click.Context,
    n: int,
    sigma: Optional[float],
    theta: float,
    t_end: float,
    dt: Optional[float],
    grid: Optional[Tuple[int, int]],
    log_every: int,
    snapshot_every: int,
    linear: bool,
    conserve_check: bool,
    corrector: Optional[str],
) -> None:
    """Evolves u_{theta,n}(0) and writes its norm history (t,l2,e2,e_sigma,hamiltonian)."""
    config = _config(ctx)
    sigma = sigma if sigma is not None else float(config["sigma"])
    idx = admissible_index(n)
    torus = _grid_for(config, n, grid)
    p = AnsatzParams(theta=theta, idx=idx, sigma=sigma, corrector=corrector or str(config["corrector"]))
    u0 = initial_ansatz(p, torus)
    cfg = EvolveConfig.auto(
        u0,
        t_end,
        float(config["dt_max"]),
        dt=dt,
        log_every=log_every,
        conserve_check=conserve_check,
        nonlinear=not linear,
        snapshot_every=snapshot_every,
        sigma=sigma,
        tolerances=dict(config["tolerances"]),
    )
    trajectory = evolve(u0, cfg)

    out_dir = str(config["out_dir"])
    rows = [
        [t, r["l2"], r["e2"], r["e_sigma"], r["hamiltonian"]]
        for t, r in zip(trajectory.times, trajectory.norm_history)
    ]
    path = write_csv(os.path.join(out_dir, f"evolve_n{n}.csv"), ["t", "l2", "e2", "e_sigma", "hamiltonian"], rows)
    console.print(f"[green]wrote[/green] {path}")
    for t, state in zip(trajectory.snapshot_times, trajectory.snapshots):
        step_index = round(t / cfg.step_dt)
        write_snapshot(state, os.path.join(out_dir, f"evolve_n{n}_step{step_index:06d}.kp5"))  # type: ignore[arg-type]
    drift = trajectory.drift()
    console.print(f"L2 drift {drift['l2_drift']:.3e}, H drift {drift['hamiltonian_drift']:.3e}")


def _ansatz_setup(
    config: Config,
    n: int,
    sigma: Optional[float],
    theta: float,
    corrector: Optional[str],
    grid: Optional[Tuple[int, int]],
) -> Tuple[AnsatzParams, TorusGrid]:
    idx = admissible_index(n)
    sigma = sigma if sigma is not None else float(config["sigma"])
    p = AnsatzParams(theta=theta, idx=idx, sigma=sigma, corrector=corrector or str(config["corrector"]))
    return p, _grid_for(config, n, grid)


@cli.command()
@click.option("--n", "n", required=True, type=int)
@click.option("--sigma", type=float)
@click.option("--theta", default=1.0, show_default=True, type=float)
@click.option(
    "--times",
    default=",".join(str(t) for t in RESIDUAL_TIMES),
    show_default=True,
    help="Comma-separated step times.",
)
@click.option("--dt", type=float, help="Low-frequency solver step (default dt_max).")
@click.option("--grid", nargs=2, type=int)
@corrector_option
@click.pass_context
def residual(
    ctx: click.Context,
    n: int,
    sigma: Optional[float],
    theta: float,
    times: str,
    dt: Optional[float],
    grid: Optional[Tuple[int, int]],
    corrector: Optional[str],
) -> None:
    """Equation residual of u_{theta,n} as CSV (t,residual_l2) on stdout."""
    config = _config(ctx)
    p, torus = _ansatz_setup(config, n, sigma, theta, corrector, grid)
    samples = _parse_times(times)
    step = _step_for(samples, dt if dt is not None else float(config["dt_max"]))
    horizon = max(max(samples), step)
    lowfreq = lowfreq_trajectory(theta, p.idx, t_end=horizon, dt=step, nx=int(config["lowfreq_nx"]))
    rows = residual_series(
        p, samples, lowfreq, torus, workers=int(config.get("threads", 1)), budget=config["tolerances"]["phase_budget"]
    )
    click.echo(csv_text(["t", "residual_l2"], rows), nl=False)


@cli.command(name="ansatz-dump")
@click.option("--n", "n", required=True, type=int)
@click.option("--sigma", type=float)
@click.option("--theta", default=1.0, show_default=True, type=float)
@click.option(
    "--t", "t", default=0.0, show_default=True, type=float, help="Time (a step time of the low-frequency flow)."
)
@click.option("--dt", type=float)
@click.option("--grid", nargs=2, type=int)
@click.option("--output", type=click.Path(dir_okay=False), help="Snapshot file (default OUT/ansatz_n{n}.kp5).")
@corrector_option
@click.pass_context
def ansatz_dump(
    ctx: click.Context,
    n: int,
    sigma: Optional[float],
    theta: float,
    t: float,
    dt: Optional[float],
    grid: Optional[Tuple[int, int]],
    output: Optional[str],
    corrector: Optional[str],
) -> None:
    """Writes u_{theta,n}(t) as a KP5LAB1 snapshot."""
    config = _config(ctx)
    p, torus = _ansatz_setup(config, n, sigma, theta, corrector, grid)
    if t == 0:
        field = initial_ansatz(p, torus)
    else:
        step = _step_for([t], dt if dt is not None else float(config["dt_max"]))
        lowfreq = lowfreq_trajectory(theta, p.idx, t_end=t, dt=step, nx=int(config["lowfreq_nx"]))
        field = build_ansatz(p, t, lowfreq, torus, config["tolerances"]["phase_budget"])
    path = output or os.path.join(str(config["out_dir"]), f"ansatz_n{n}.kp5")
    write_snapshot(field, path)
    console.print(f"[green]wrote[/green] {path}")


def _run(ctx: click.Context, name: str, params: Dict[str, Any]) -> None:
    config = _config(ctx)
    clean = {k: v for k, v in params.items() if v is not None}
    manifest = run_experiment(name, clean, config, str(config["out_dir"]))
    _print_summary(manifest)


@cli.command()
@click.option("--n", "ns", required=True, type=int, multiple=True, help="Repeat for several n on a common horizon.")
@click.option("--sigma", type=float)
@click.option("--t-end", type=float)
@click.option("--dt", type=float)
@click.option("--grid", nargs=2, type=int, help="Only with a single --n.")
@corrector_option
@click.pass_context
def thm1(
    ctx: click.Context,
    ns: Tuple[int, ...],
    sigma: Optional[float],
    t_end: Optional[float],
    dt: Optional[float],
    grid: Optional[Tuple[int, int]],
    corrector: Optional[str],
) -> None:
    """Separation of u_n and v_n from converging initial data."""
    if grid and len(ns) > 1:
        raise ParameterError("--grid applies to a single --n")
    params: Dict[str, Any] = {"n": ns[0] if len(ns) == 1 else list(ns), "sigma": sigma, "t_end": t_end, "dt": dt}
    params["corrector"] = corrector
    params["grid"] = list(grid) if grid else None
    _run(ctx, "thm1", params)


@cli.command()
@click.option("--n", "ns", required=True, type=int, multiple=True, help="Repeat for several n.")
@click.option("--sigma", type=float)
@click.option("--theta", type=float)
@click.option("--t-end", type=float)
@click.option("--dt", type=float)
@click.option("--grid", nargs=2, type=int, help="Only with a single --n.")
@corrector_option
@click.pass_context
def compare(
    ctx: click.Context,
    ns: Tuple[int, ...],
    sigma: Optional[float],
    theta: Optional[float],
    t_end: Optional[float],
    dt: Optional[float],
    grid: Optional[Tuple[int, int]],
    corrector: Optional[str],
) -> None:
    """Numerical flow against the ansatz; reports the gap and its decay in n."""
    if grid and len(ns) > 1:
        raise ParameterError("--grid applies to a single --n")
    params: Dict[str, Any] = {"n": list(ns), "sigma": sigma, "theta": theta, "t_end": t_end, "dt": dt}
    params["corrector"] = corrector
    params["grid"] = list(grid) if grid else None
    _run(ctx, "compare", params)


@cli.command()
@click.option("--s", "s", default=2.0, show_default=True, type=float, help="Sobolev exponent.")
@click.option("--n", "ns", type=int, multiple=True, help="Frequencies (default 16 64 256).")
@click.option("--t", "t", default=1.0, show_default=True, type=float)
@click.option("--nx", type=int)
@click.pass_context
def galilean(ctx: click.Context, s: float, ns: Tuple[int, ...], t: float, nx: Optional[int]) -> None:
    """Non-uniform continuity of the Galilean transformation on H^s(T)."""
    _run(ctx, "galilean", {"s": s, "n": list(ns) or None, "t": t, "nx": nx})


@cli.command()
@click.option("--config", "config_file", required=True, type=click.Path(dir_okay=False), help="JSON or YAML run file.")
@click.pass_context
def run(ctx: click.Context, config_file: str) -> None:
    """Runs the experiment named in a run file."""
    config = _config(ctx)
    explicit_out = ctx.find_root().params.get("out_dir")
    manifest = run_manifest(config_file, config, explicit_out or None)
    _print_summary(manifest)


@cli.command(name="experiments")
def list_experiments() -> None:
    """Lists the registered experiments."""
    for name in sorted(EXPERIMENTS):
        click.echo(name)


if __name__ == "__main__":
    cli()
