import json
from pathlib import Path

import pytest

from kp5lab.config import DEFAULT_CONFIG
from kp5lab.exceptions import ParameterError
from kp5lab.lab import get_experiment, load_run_file, manifest_path, run_experiment, run_manifest


def test_unknown_experiment() -> None:
    """
    Unknown experiment names are parameter errors listing the registry.

    Returns:
        None
    """
    with pytest.raises(ParameterError, match="galilean"):
        get_experiment("thm2")


def test_run_experiment_writes_manifest(tmp_path: Path) -> None:
    """
    A finished run leaves its CSV and a sorted JSON manifest in the output directory.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    manifest = run_experiment("galilean", {"n": [16, 32]}, out_dir=str(tmp_path))
    path = Path(manifest_path(str(tmp_path), "galilean"))
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["experiment_name"] == "galilean"
    assert data["parameters"]["n"] == [16, 32]
    assert data["outputs"] == manifest["outputs"]
    assert set(data) == {"experiment_name", "parameters", "artifact_version", "outputs", "summary_metrics"}


def test_auto_grid_is_recorded(tmp_path: Path) -> None:
    """
    Without a grid the sizing rule is applied and written to the manifest.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    manifest = run_experiment("thm1", {"n": 2, "t_end": 0.05}, out_dir=str(tmp_path))
    assert manifest["parameters"]["grid"] == [32, 32]
    assert manifest["parameters"]["t_end"] == 0.05


def test_non_admissible_index_leaves_nothing(tmp_path: Path) -> None:
    """
    n = 5 fails with a parameter error and no files are created.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    with pytest.raises(ParameterError, match="not admissible"):
        run_experiment("thm1", {"n": 5}, out_dir=str(tmp_path))
    assert list(tmp_path.iterdir()) == []


def test_failed_run_removes_partial_outputs(tmp_path: Path) -> None:
    """
    When a later index fails, files already written for earlier ones are removed.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    with pytest.raises(ParameterError, match="exact-arithmetic"):
        run_experiment("compare", {"n": [2, 653], "t_end": 0.05}, out_dir=str(tmp_path))
    assert not (tmp_path / "compare_n2.csv").exists()
    assert not Path(manifest_path(str(tmp_path), "compare")).exists()


def test_run_manifest_from_yaml(tmp_path: Path) -> None:
    """
    A YAML run file names the experiment, its parameters and the output directory.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    out = tmp_path / "out"
    run_file = tmp_path / "run.yaml"
    run_file.write_text(
        f"experiment: galilean\nout_dir: {out.as_posix()}\nparameters:\n  n: [16, 32]\n  t: 0.5\n",
        encoding="utf-8",
    )
    manifest = run_manifest(str(run_file), DEFAULT_CONFIG)
    assert manifest["parameters"]["t"] == 0.5
    assert (out / "galilean.csv").exists()
    assert (out / "galilean_manifest.json").exists()

    override = tmp_path / "override"
    run_manifest(str(run_file), DEFAULT_CONFIG, str(override))
    assert (override / "galilean_manifest.json").exists()


def test_run_file_validation(tmp_path: Path) -> None:
    """
    Missing files, non-mappings and files without an experiment are refused.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    with pytest.raises(ParameterError, match="not found"):
        load_run_file(str(tmp_path / "absent.json"))
    listing = tmp_path / "list.yaml"
    listing.write_text("- galilean\n", encoding="utf-8")
    with pytest.raises(ParameterError, match="mapping"):
        load_run_file(str(listing))
    nameless = tmp_path / "nameless.json"
    nameless.write_text('{"parameters": {"n": 2}}', encoding="utf-8")
    with pytest.raises(ParameterError, match="names no experiment"):
        load_run_file(str(nameless))
    legacy = tmp_path / "legacy.json"
    legacy.write_text('{"experiment_name": "thm1", "parameters": {"n": 2}}', encoding="utf-8")
    assert load_run_file(str(legacy))["experiment"] == "thm1"


def test_json_thm1_run_is_reproducible(tmp_path: Path) -> None:
    """
    A minimal JSON run of thm1 lists two CSV outputs, and a rerun gives the same bytes.

    Args:
        tmp_path: Pytest fixture for temporary directory creation.

    Returns:
        None
    """
    run_file = tmp_path / "thm1.json"
    run_file.write_text('{"experiment": "thm1", "parameters": {"n": 2, "t_end": 0.05}}', encoding="utf-8")
    first = run_manifest(str(run_file), DEFAULT_CONFIG, str(tmp_path / "a"))
    run_manifest(str(run_file), DEFAULT_CONFIG, str(tmp_path / "b"))
    csvs = [Path(p).name for p in first["outputs"] if p.endswith(".csv")]
    assert csvs == ["thm1_n2_series.csv", "thm1_n2_norms.csv"]
    assert "l2_drift" in first["summary_metrics"]
    assert "hamiltonian_drift" in first["summary_metrics"]
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
