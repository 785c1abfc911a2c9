import csv
import math
from pathlib import Path
from types import SimpleNamespace
from typing import List

import pytest

from kp5lab.config import DEFAULT_CONFIG, merge_overrides
from kp5lab.evolve import EvolveConfig
from kp5lab.exceptions import ParameterError
from kp5lab.experiments import CompareExperiment, GalileanExperiment, Thm1Experiment
from kp5lab.experiments.compare import decay_exponent
from kp5lab.experiments.galilean import galilean_rows, loglog_slope
from kp5lab.experiments.thm1 import envelope_amplitude, envelopes, separation_window


def _rows(path: str) -> List[List[float]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        next(reader)
        return [[float(cell) for cell in row] for row in reader]


def test_envelopes_at_small_t() -> None:
    """
    Both envelopes vanish at t = 0 and grow like ((n+1)/n)^sigma sqrt(area/2) t.

    Returns:
        None
    """
    assert envelopes(2, 2.0, 10.0, 0.0) == (0.0, 0.0)
    lower, resonant = envelopes(2, 2.0, 10.0, 1e-4)
    slope = 2.25 * math.sqrt(5.0)
    assert lower / 1e-4 == pytest.approx(slope, rel=1e-6)
    assert resonant / 1e-4 == pytest.approx(1.5 * slope, rel=1e-6)


def test_decay_exponent() -> None:
    """
    delta_hat = -log(g2/g1) / log(n2/n1), None for a vanishing gap.

    Returns:
        None
    """
    assert decay_exponent(2, 1.0, 18, 1.0 / 81.0) == pytest.approx(2.0)
    assert decay_exponent(2, 0.0, 18, 1.0) is None


def test_galilean_rows_follow_closed_forms() -> None:
    """
    before = sqrt(2 pi)/n exactly; after/envelope = ((1 + n^2)/n^2)^(s/2).

    Returns:
        None
    """
    rows = galilean_rows([16, 64, 256], 2.0, 1.0, 1024)
    for row in rows:
        n = row["n"]
        assert row["before"] == pytest.approx(math.sqrt(2 * math.pi) / n, rel=1e-12)
        assert row["after"] / row["envelope"] == pytest.approx((1 + n * n) / (n * n), rel=1e-10)
    assert loglog_slope([16, 64, 256], [r["before"] for r in rows]) == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(ParameterError):
        galilean_rows([600], 2.0, 1.0, 1024)


def test_galilean_experiment(tmp_path: Path) -> None:
    """
    The Galilean experiment writes its table and reports a unit slope before, none after.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    manifest = GalileanExperiment(out_dir=str(tmp_path)).run({})
    assert manifest["parameters"]["n"] == [16, 64, 256]
    assert manifest["parameters"]["nx"] == 1024
    summary = manifest["summary_metrics"]
    assert summary["slope_before"] == pytest.approx(-1.0, abs=1e-9)
    assert summary["min_after_over_sin"] == pytest.approx(2 * math.sin(0.5) / math.sin(1.0), rel=1e-2)
    assert summary["after_spread"] < 1e-2
    assert manifest["outputs"] == [str(tmp_path / "galilean.csv")]
    assert len(_rows(manifest["outputs"][0])) == 3


def test_thm1_for_n2(tmp_path: Path) -> None:
    """
    For n = 2 the flows start 2/n sqrt(4 pi^2 / lambda) apart and separate along the resonant envelope.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    manifest = Thm1Experiment(out_dir=str(tmp_path)).run({"n": 2})
    params, summary = manifest["parameters"], manifest["summary_metrics"]
    assert params["grid"] == [32, 32]
    assert params["dt"] == pytest.approx(1e-3)
    assert params["t_end"] == 1.0

    closed_form = 2.0 / 2 * math.sqrt(4 * math.pi**2 / math.sqrt(35))
    assert closed_form == pytest.approx(2.5832287, rel=1e-7)
    assert summary["initial_diff"] == pytest.approx(closed_form, rel=1e-8)
    assert summary["initial_diff_ratio"] == pytest.approx(1.0, abs=1e-12)
    assert summary["envelope_deviation_resonant"] <= 0.3
    assert summary["within_30pct_resonant"]
    assert summary["separation_constant"] > 0
    assert summary["separation_window"] == [0.2, 1.0]
    assert summary["l2_drift"] < 1e-8
    assert summary["hamiltonian_drift"] < 1e-6
    assert summary["horizon_fallback"] is False
    assert summary["runtime_estimate_s"] > 0

    series = _rows(str(tmp_path / "thm1_n2_series.csv"))
    assert len(series) == 101
    assert series[0][3] == pytest.approx(closed_form, rel=1e-8)
    assert series[0][6] == pytest.approx(0.0, abs=1e-12)
    assert series[-1][0] == pytest.approx(1.0)
    assert (tmp_path / "thm1_n2_norms.csv").exists()


def test_thm1_fallback_horizon_is_recorded(tmp_path: Path) -> None:
    """
    A shortened horizon shows up in t_end and in the separation window.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    config = merge_overrides(DEFAULT_CONFIG, {"horizon_fallback": "always", "fallback_t_end": 0.5})
    manifest = Thm1Experiment(config, out_dir=str(tmp_path)).run({"n": 2})
    summary = manifest["summary_metrics"]
    assert manifest["parameters"]["t_end"] == 0.5
    assert summary["horizon_fallback"] is True
    assert summary["separation_window"] == [0.2, 0.5]
    assert summary["separation_constant"] > 0
    assert len(_rows(str(tmp_path / "thm1_n2_series.csv"))) == 51

    with pytest.raises(ParameterError, match="horizon_fallback"):
        bad = merge_overrides(DEFAULT_CONFIG, {"horizon_fallback": "sometimes"})
        Thm1Experiment(bad, out_dir=str(tmp_path)).run({"n": 2})


def test_runtime_estimate_counts_norm_evaluations(monkeypatch: pytest.MonkeyPatch) -> None:
    """
    The horizon estimate adds three norm evaluations per CSV sample to the two evolutions.

    Args:
        monkeypatch: Pytest fixture replacing the timed step and norms measurements.

    Returns:
        None
    """
    monkeypatch.setattr(Thm1Experiment, "_cost", lambda self, run: (0.5, 2.0))
    run = SimpleNamespace(cfg=EvolveConfig(dt=0.125, t_end=1.0))

    # steps alone: 2 * 8 * 0.5 = 8; with norms: 8 + 3 * 5 * 2.0 = 38
    roomy = merge_overrides(DEFAULT_CONFIG, {"runtime_budget_s": 100.0})
    horizon, shortened, estimate = Thm1Experiment(roomy)._horizon([run], 1.0, 0.25)  # type: ignore[list-item]
    assert (horizon, shortened) == (1.0, False)
    assert estimate == pytest.approx(38.0)

    tight = merge_overrides(DEFAULT_CONFIG, {"runtime_budget_s": 20.0, "fallback_t_end": 0.5})
    horizon, shortened, estimate = Thm1Experiment(tight)._horizon([run], 1.0, 0.25)  # type: ignore[list-item]
    assert (horizon, shortened) == (0.5, True)
    assert estimate == pytest.approx(2 * 4 * 0.5 + 3 * 3 * 2.0)


def test_separation_window_and_amplitude() -> None:
    """
    The window is cut at t_end; the amplitude is ((n+1)/n)^sigma.

    Returns:
        None
    """
    assert separation_window(1.0) == (0.2, 1.0)
    assert separation_window(0.5) == (0.2, 0.5)
    assert separation_window(3.0) == (0.2, 1.0)
    assert envelope_amplitude(2, 2.0) == pytest.approx(2.25)
    assert envelope_amplitude(2, 2.0) / envelope_amplitude(18, 2.0) == pytest.approx(2.25 * 324 / 361)


def test_combined_summary_compares_indices() -> None:
    """
    Several n get suffixed metrics, raw and amplitude-normalized separation ratios.

    Returns:
        None
    """
    results = [
        {"n": n, "separation_constant": c, "initial_diff": d, "dt": 1e-3, "liminf_note": "note"}
        for n, c, d in ((2, 12.0, 2.7), (18, 6.0, 0.3))
    ]
    summary = Thm1Experiment()._combine([2, 18], 2.0, results)
    assert summary["separation_constant_n2"] == 12.0
    assert summary["dt_n18"] == 1e-3
    assert summary["liminf_note"] == "note"
    assert "n_n2" not in summary
    assert summary["separation_ratio_n2_n18"] == pytest.approx(2.0)
    assert summary["normalized_separation_ratio_n2_n18"] == pytest.approx(2.0 * (19 / 18) ** 2 / 2.25)
    assert summary["initial_diff_ratio_n2_n18"] == pytest.approx(9.0)


@pytest.mark.slow
def test_separation_is_uniform_in_n(tmp_path: Path) -> None:
    """
    On a common window the separation constants of n = 2 and n = 18 are comparable while
    the initial difference shrinks 9 times.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    manifest = Thm1Experiment(out_dir=str(tmp_path)).run({"n": [2, 18]})
    params, summary = manifest["parameters"], manifest["summary_metrics"]
    assert params["grid"] == [[32, 32], [256, 16384]]
    assert summary["separation_window"] == [0.2, params["t_end"]]
    assert summary["initial_diff_ratio_n2_n18"] == pytest.approx(9.0, rel=1e-8)
    assert summary["separation_constant_n18"] > 0
    assert 0.5 <= summary["normalized_separation_ratio_n2_n18"] <= 2.0
    assert 0.5 <= summary["separation_ratio_n2_n18"] <= 2.5


def test_thm1_refuses_non_admissible(tmp_path: Path) -> None:
    """
    n = 5 is refused before any file is written.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    experiment = Thm1Experiment(out_dir=str(tmp_path))
    with pytest.raises(ParameterError):
        experiment.run({"n": 5})
    assert experiment.outputs == []
    with pytest.raises(ParameterError, match="missing"):
        experiment.run({})


def test_compare_for_n2(tmp_path: Path) -> None:
    """
    The numerical flow starts on the ansatz and stays close over a short horizon.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    manifest = CompareExperiment(out_dir=str(tmp_path)).run({"n": 2, "t_end": 0.1})
    rows = _rows(str(tmp_path / "compare_n2.csv"))
    assert len(rows) == 11
    assert rows[0][1] < 1e-14
    gap = manifest["summary_metrics"]["max_dxsigma_gap_n2"]
    assert 0 < gap < 1.0
    assert manifest["parameters"]["n"] == 2


@pytest.mark.slow
def test_compare_gap_decays_with_n(tmp_path: Path) -> None:
    """
    The ansatz gap shrinks from n = 2 to n = 18.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    manifest = CompareExperiment(out_dir=str(tmp_path)).run({"n": [2, 18], "t_end": 0.1})
    summary = manifest["summary_metrics"]
    assert summary["decay_exponent_n2_n18"] > 0
    assert manifest["parameters"]["grid"] == [[32, 32], [256, 16384]]
