import logging
import os
from typing import Any, Dict, Optional, Type

import yaml

from .config import DEFAULT_CONFIG, Config
from .exceptions import ParameterError
from .experiments import BaseExperiment, CompareExperiment, GalileanExperiment, Thm1Experiment
from .report import remove_outputs, write_manifest
from .types import ExperimentManifest

logger = logging.getLogger(__name__)

EXPERIMENTS: Dict[str, Type[BaseExperiment]] = {
    "thm1": Thm1Experiment,
    "compare": CompareExperiment,
    "galilean": GalileanExperiment,
}


def get_experiment(name: str, config: Optional[Config] = None, out_dir: str = ".") -> BaseExperiment:
    """
    Returns the experiment registered under `name`.

    Raises:
        ParameterError: If no experiment has that name.
    """
    try:
        cls = EXPERIMENTS[name]
    except KeyError:
        raise ParameterError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}") from None
    return cls(config=config, out_dir=out_dir)


def manifest_path(out_dir: str, name: str) -> str:
    return os.path.join(out_dir, f"{name}_manifest.json")


def run_experiment(
    name: str, params: Dict[str, Any], config: Optional[Config] = None, out_dir: Optional[str] = None
) -> ExperimentManifest:
    """
    Runs one experiment and writes its manifest beside the outputs.

    On any failure the files the run already wrote are removed before the error propagates.
    """
    config = config if config is not None else DEFAULT_CONFIG
    out_dir = out_dir or str(config.get("out_dir", DEFAULT_CONFIG["out_dir"]))
    experiment = get_experiment(name, config, out_dir)
    try:
        manifest = experiment.run(dict(params))
        write_manifest(manifest_path(out_dir, name), manifest)
    except BaseException:
        removed = remove_outputs(experiment.outputs + [manifest_path(out_dir, name)])
        if removed:
            logger.warning("%s failed; removed partial outputs: %s", name, ", ".join(removed))
        raise
    logger.info("%s finished: %d outputs in %s", name, len(manifest["outputs"]), out_dir)
    return manifest


def load_run_file(path: str) -> Dict[str, Any]:
    """
    Reads a run file (JSON or YAML): {"experiment": name, "parameters": {...}, "out_dir": optional}.

    Raises:
        ParameterError: If the file is missing, unparsable or lacks the experiment name.
    """
    if not os.path.isfile(path):
        raise ParameterError(f"run file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ParameterError(f"cannot parse run file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ParameterError(f"run file {path} must hold a mapping")
    name = data.get("experiment", data.get("experiment_name"))
    if not name:
        raise ParameterError(f"run file {path} names no experiment")
    parameters = data.get("parameters") or {}
    if not isinstance(parameters, dict):
        raise ParameterError("'parameters' must be a mapping")
    return {"experiment": str(name), "parameters": parameters, "out_dir": data.get("out_dir")}


def run_manifest(
    config_file: str, config: Optional[Config] = None, out_dir: Optional[str] = None
) -> ExperimentManifest:
    """Dispatches the experiment named in `config_file`; an explicit out_dir wins over the file's."""
    run = load_run_file(config_file)
    target = out_dir or run["out_dir"]
    return run_experiment(run["experiment"], run["parameters"], config, target)
