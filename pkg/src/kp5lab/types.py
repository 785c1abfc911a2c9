from typing import List, Dict, TypedDict, Any


class NormReport(TypedDict):
    """Norms and energy of a field; every entry is an unnormalized Lebesgue integral."""

    l2: float
    e2: float
    e_sigma: float
    hamiltonian: float
    sigma: float


class ExperimentManifest(TypedDict):
    """What an experiment ran with, what it wrote, and what it measured."""

    experiment_name: str
    parameters: Dict[str, Any]
    artifact_version: str
    outputs: List[str]
    summary_metrics: Dict[str, Any]


class DriftSummary(TypedDict):
    """Conservation diagnostics of one evolution."""

    l2_drift: float
    hamiltonian_drift: float


class GalileanRow(TypedDict):
    n: int
    before: float
    after: float
    envelope: float
