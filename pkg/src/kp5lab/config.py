import os
import copy
from typing import Dict, Any, TypedDict, cast
from .constants import CSV_INTERVAL, DEFAULT_DT_MAX, DEFAULT_TOLERANCES

# tomllib from 3.11, tomli before; without either the defaults are used
tomllib: Any = None
try:
    import tomllib as _tomllib  # type: ignore

    tomllib = _tomllib
except ImportError:
    try:
        import tomli as _tomli

        tomllib = _tomli
    except ImportError:
        tomllib = None


class Tolerances(TypedDict, total=False):
    l2_drift: float
    hamiltonian_drift: float
    invariant: float
    constraint: float
    blowup_factor: float
    phase_budget: float


class Config(TypedDict, total=False):
    threads: int
    out_dir: str
    sigma: float
    dt_max: float
    dealias_fraction: str
    csv_interval: float
    lowfreq_nx: int
    runtime_budget_s: float
    fallback_t_end: float
    horizon_fallback: str
    corrector: str
    tolerances: Tolerances


DEFAULT_CONFIG: Config = {
    "threads": 1,
    "out_dir": "kp5lab-out",
    "sigma": 2.0,
    "dt_max": DEFAULT_DT_MAX,
    "dealias_fraction": "2/3",
    "csv_interval": CSV_INTERVAL,
    "lowfreq_nx": 64,
    "runtime_budget_s": 1800.0,
    "fallback_t_end": 0.5,
    "horizon_fallback": "auto",
    "corrector": "matched",
    "tolerances": cast(Tolerances, DEFAULT_TOLERANCES),
}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merges `override` into a copy of `base`; nested tables (tolerances) merge key by key.

    Args:
        base (Dict[str, Any]): Defaults, left untouched.
        override (Dict[str, Any]): Values from pyproject.toml, the CLI or a run file.

    Returns:
        Dict[str, Any]: A new dictionary.
    """
    result = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and key in result and isinstance(result[key], dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = value
    return result


def load_config(path: str = ".") -> Config:
    """
    Loads the [tool.kp5lab] table of pyproject.toml and merges it with DEFAULT_CONFIG.

    Args:
        path (str): A directory, or a file whose directory holds pyproject.toml.

    Returns:
        Config: The merged configuration dictionary.
    """
    if os.path.isfile(path):
        search_dir = os.path.dirname(os.path.abspath(path))
    else:
        search_dir = path

    config_path = os.path.join(search_dir, "pyproject.toml")
    user_config: Dict[str, Any] = {}

    if tomllib and os.path.exists(config_path):
        try:
            with open(config_path, "rb") as f:
                data = tomllib.load(f)
                user_config = data.get("tool", {}).get("kp5lab", {})
        except Exception:
            # Malformed or unreadable: run on defaults
            pass

    return cast(Config, _deep_merge(cast(Dict[str, Any], DEFAULT_CONFIG), user_config))


def merge_overrides(config: Config, overrides: Dict[str, Any]) -> Config:
    """Applies CLI or run-file overrides, ignoring keys left unset (None)."""
    present = {k: v for k, v in overrides.items() if v is not None}
    return cast(Config, _deep_merge(cast(Dict[str, Any], config), present))
