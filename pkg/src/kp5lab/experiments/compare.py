import logging
import math
from typing import Any, Dict, List, Optional, Sequence

from ..ansatz import AnsatzParams, build_ansatz, check_index_budget, initial_ansatz, lowfreq_trajectory
from ..evolve import EvolveConfig, drift_of, iterate
from ..numtheory import admissible_index
from ..spectral import dx_sigma_l2, l2_norm, norms
from ..types import ExperimentManifest, NormReport
from .base import BaseExperiment

logger = logging.getLogger(__name__)

HEADER = ["t", "l2_gap", "dxsigma_gap"]


def decay_exponent(n1: int, gap1: float, n2: int, gap2: float) -> Optional[float]:
    """delta_hat = -log(gap2 / gap1) / log(n2 / n1); None when a gap vanishes."""
    if gap1 <= 0 or gap2 <= 0 or n1 == n2:
        return None
    return -math.log(gap2 / gap1) / math.log(n2 / n1)


class CompareExperiment(BaseExperiment):
    """Numerical flow of u_{theta,n}(0) against the ansatz u_{theta,n}(t)."""

    @property
    def name(self) -> str:
        return "compare"

    def run(self, params: Dict[str, Any]) -> ExperimentManifest:
        params = dict(params)
        ns = self.index_list(params)
        sigma = float(params.setdefault("sigma", self.setting("sigma")))
        theta = float(params.setdefault("theta", 1.0))
        t_end = float(params.setdefault("t_end", 1.0))
        corrector = str(params.setdefault("corrector", self.setting("corrector")))
        interval = float(params.setdefault("csv_interval", self.setting("csv_interval")))
        lowfreq_nx = int(params.setdefault("lowfreq_nx", self.setting("lowfreq_nx")))

        summary: Dict[str, Any] = {}
        gaps: List[float] = []
        drifts = {"l2_drift": 0.0, "hamiltonian_drift": 0.0}
        grids = []
        steps = []
        for n in ns:
            per_n = dict(params, n=n)
            if len(ns) > 1:
                per_n.pop("grid", None)
            gap, drift = self._run_one(per_n, n, sigma, theta, t_end, corrector, interval, lowfreq_nx)
            grids.append(per_n["grid"])
            steps.append(per_n["dt"])
            summary[f"max_dxsigma_gap_n{n}"] = gap
            gaps.append(gap)
            for key in drifts:
                drifts[key] = max(drifts[key], drift[key])  # type: ignore[literal-required]

        params["grid"] = grids[0] if len(grids) == 1 else grids
        params["dt"] = steps[0] if len(steps) == 1 else steps
        if len(ns) == 1:
            params["n"] = ns[0]
        for (n1, g1), (n2, g2) in zip(zip(ns, gaps), zip(ns[1:], gaps[1:])):
            summary[f"decay_exponent_n{n1}_n{n2}"] = decay_exponent(n1, g1, n2, g2)
        summary.update(drifts)
        return self.manifest(params, summary)

    def _run_one(
        self,
        params: Dict[str, Any],
        n: int,
        sigma: float,
        theta: float,
        t_end: float,
        corrector: str,
        interval: float,
        lowfreq_nx: int,
    ) -> Sequence[Any]:
        tolerances = self.tolerances()
        idx = admissible_index(n)
        check_index_budget(idx, t_end, tolerances["phase_budget"])
        grid = self.resolve_grid(params, idx)
        p = AnsatzParams(theta=theta, idx=idx, sigma=sigma, corrector=corrector)
        u0 = initial_ansatz(p, grid)

        cfg = EvolveConfig.auto(
            u0, t_end, float(self.setting("dt_max")), dt=params.get("dt"), sigma=sigma, tolerances=tolerances
        )
        params["dt"] = cfg.step_dt
        lowfreq = lowfreq_trajectory(theta, idx, t_end=t_end, dt=cfg.step_dt, nx=lowfreq_nx)
        every = max(1, round(interval / cfg.step_dt))

        rows: List[List[float]] = []
        history: List[NormReport] = []
        for step, t, u in iterate(u0, cfg):
            if step % every and step != cfg.steps:
                continue
            gap = u - build_ansatz(p, t, lowfreq, grid, tolerances["phase_budget"])  # type: ignore[operator]
            rows.append([t, l2_norm(gap), dx_sigma_l2(gap, sigma)])
            history.append(norms(u, sigma, tolerances["constraint"]))  # type: ignore[arg-type]

        self.write_csv(f"compare_n{n}.csv", HEADER, rows)
        worst = max(row[2] for row in rows)
        logger.info("compare n=%d: max dxsigma gap %.3e", n, worst)
        return worst, drift_of(history)
