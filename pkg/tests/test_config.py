import os
import tempfile

from kp5lab.config import DEFAULT_CONFIG, load_config, merge_overrides


def test_load_config_defaults() -> None:
    """
    Without a pyproject.toml every key keeps its default.

    Returns:
        None
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        config = load_config(tmpdir)
        assert config["dt_max"] == DEFAULT_CONFIG["dt_max"]
        assert config["tolerances"] == DEFAULT_CONFIG["tolerances"]


def test_load_config_with_pyproject() -> None:
    """
    [tool.kp5lab] overrides keys and merges the tolerances table key by key.

    Returns:
        None
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        pyproject_content = """
[tool.kp5lab]
sigma = 3.0
corrector = "scaled"
[tool.kp5lab.tolerances]
l2_drift = 1e-6
"""
        with open(os.path.join(tmpdir, "pyproject.toml"), "w") as f:
            f.write(pyproject_content)

        config = load_config(tmpdir)

        assert config["sigma"] == 3.0
        assert config["corrector"] == "scaled"
        assert config["tolerances"]["l2_drift"] == 1e-6

        # Untouched tolerances keep their defaults
        assert config["tolerances"]["phase_budget"] == DEFAULT_CONFIG["tolerances"]["phase_budget"]


def test_load_config_invalid_toml() -> None:
    """
    A malformed pyproject.toml is ignored.

    Returns:
        None
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        with open(os.path.join(tmpdir, "pyproject.toml"), "w") as f:
            f.write("invalid = [")

        config = load_config(tmpdir)
        assert config == DEFAULT_CONFIG


def test_merge_overrides_skips_unset_values() -> None:
    """
    Overrides left as None keep the configured value.

    Returns:
        None
    """
    config = merge_overrides(DEFAULT_CONFIG, {"out_dir": "results", "threads": None})
    assert config["out_dir"] == "results"
    assert config["threads"] == DEFAULT_CONFIG["threads"]
    assert DEFAULT_CONFIG["out_dir"] == "kp5lab-out"
