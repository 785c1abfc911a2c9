import logging
import os
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from .. import __version__
from ..config import DEFAULT_CONFIG, Config
from ..constants import DEFAULT_TOLERANCES
from ..exceptions import ParameterError
from ..numtheory import AdmissibleIndex
from ..report import write_csv
from ..spectral import TorusGrid
from ..types import ExperimentManifest

logger = logging.getLogger(__name__)


class BaseExperiment(ABC):
    """
    A reproducible run: parameters in, CSV files and a manifest out.

    Every file written through `write_csv` is tracked in `outputs`, so a failed run
    can be cleaned up by the caller.
    """

    def __init__(self, config: Optional[Config] = None, out_dir: str = ".") -> None:
        self.config: Config = config if config is not None else DEFAULT_CONFIG
        self.out_dir = out_dir
        self.outputs: List[str] = []

    @property
    @abstractmethod
    def name(self) -> str:
        """
        Returns the registry name of the experiment.
        """
        pass

    @abstractmethod
    def run(self, params: Dict[str, Any]) -> ExperimentManifest:
        """
        Runs the experiment.

        Args:
            params (Dict[str, Any]): Experiment parameters; missing keys take defaults.

        Returns:
            ExperimentManifest: Parameters as actually used, outputs and summary metrics.
        """
        pass

    def path(self, filename: str) -> str:
        return os.path.join(self.out_dir, filename)

    def write_csv(self, filename: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        path = self.path(filename)
        self.outputs.append(path)
        write_csv(path, header, rows)
        logger.info("%s: wrote %s (%d rows)", self.name, path, len(rows))
        return path

    def manifest(self, parameters: Dict[str, Any], summary: Dict[str, Any]) -> ExperimentManifest:
        return {
            "experiment_name": self.name,
            "parameters": parameters,
            "artifact_version": __version__,
            "outputs": list(self.outputs),
            "summary_metrics": summary,
        }

    @staticmethod
    def require(params: Dict[str, Any], key: str) -> Any:
        if key not in params or params[key] is None:
            raise ParameterError(f"missing parameter {key!r}")
        return params[key]

    def index_list(self, params: Dict[str, Any], key: str = "n") -> List[int]:
        """params[key] as a list of ints; a single value becomes a one-element list."""
        value = self.require(params, key)
        if isinstance(value, (list, tuple)):
            if not value:
                raise ParameterError(f"{key!r} must not be empty")
            return [int(v) for v in value]
        return [int(value)]

    def setting(self, key: str) -> Any:
        return self.config.get(key, DEFAULT_CONFIG.get(key))  # type: ignore[misc]

    def tolerances(self) -> Dict[str, float]:
        merged = dict(DEFAULT_TOLERANCES)
        merged.update(self.config.get("tolerances", {}))
        return merged

    def dealias_fraction(self) -> Fraction:
        return Fraction(str(self.setting("dealias_fraction")))

    def resolve_grid(self, params: Dict[str, Any], idx: AdmissibleIndex) -> TorusGrid:
        """Grid from params["grid"] = [nx, ny], or auto-sized (and recorded) when absent."""
        fraction = self.dealias_fraction()
        size = params.get("grid")
        if size is None:
            grid = TorusGrid.for_index(idx, dealias_fraction=fraction)
            params["grid"] = [grid.nx, grid.ny]
            logger.info("%s: grid auto-sized to %dx%d for n=%d", self.name, grid.nx, grid.ny, idx.n)
        else:
            if len(size) != 2:
                raise ParameterError(f"grid must be [nx, ny], got {size!r}")
            grid = TorusGrid(nx=int(size[0]), ny=int(size[1]), dealias_fraction=fraction)
        grid.require(idx.n + 2, idx.alpha_index)
        return grid
