"""
Non-uniform continuity of the Galilean transformation on H^s(T).

u_n = n^-s cos(nx) + n^-1 and v_n = n^-s cos(nx) converge in H^s, while
G_t^+ u_n - G_t^+ v_n = n^-s {cos(nx + t) - cos(nx)} stays of size 2|sin(t/2)| ||cos||.
"""

import logging
import math
from typing import Any, Dict, List

import numpy as np

from ..exceptions import ParameterError
from ..spectral import LineGrid, galilean_1d, line_constant, line_wave, next_power_of_two, sobolev_norm
from ..types import ExperimentManifest, GalileanRow
from .base import BaseExperiment

logger = logging.getLogger(__name__)

HEADER = ["n", "before", "after", "envelope"]


def galilean_rows(ns: List[int], s: float, t: float, nx: int) -> List[GalileanRow]:
    grid = LineGrid(nx=nx)
    # n -> infinity value of the separation: 2|sin(t/2)| ||cos||_{L2(T)}
    envelope = 2.0 * abs(math.sin(0.5 * t)) * math.sqrt(math.pi)
    rows: List[GalileanRow] = []
    for n in ns:
        if n >= nx // 2:
            raise ParameterError(f"n={n} does not fit on {nx} points")
        v = line_wave(grid, n, amplitude=float(n) ** (-s))
        u = v + line_constant(grid, 1.0 / n)
        after = galilean_1d(u, t, 1) - galilean_1d(v, t, 1)
        rows.append({"n": n, "before": sobolev_norm(u - v, s), "after": sobolev_norm(after, s), "envelope": envelope})
    return rows


def loglog_slope(ns: List[int], values: List[float]) -> float:
    slope, _ = np.polyfit(np.log(ns), np.log(values), 1)
    return float(slope)


class GalileanExperiment(BaseExperiment):
    @property
    def name(self) -> str:
        return "galilean"

    def run(self, params: Dict[str, Any]) -> ExperimentManifest:
        params = dict(params)
        s = float(params.setdefault("s", 2.0))
        t = float(params.setdefault("t", 1.0))
        ns = [int(n) for n in params.setdefault("n", [16, 64, 256])]
        if len(ns) < 2 or min(ns) < 1:
            raise ParameterError(f"need at least two positive n, got {ns}")
        nx = int(params.setdefault("nx", max(1024, next_power_of_two(4 * max(ns)))))

        rows = galilean_rows(ns, s, t, nx)
        self.write_csv("galilean.csv", HEADER, [[r["n"], r["before"], r["after"], r["envelope"]] for r in rows])

        after = [r["after"] for r in rows]
        mean_after = float(np.mean(after))
        sin_scale = math.sqrt(math.pi) * abs(math.sin(t))
        summary = {
            "slope_before": loglog_slope(ns, [r["before"] for r in rows]),
            "after_over_envelope": [a / r["envelope"] if r["envelope"] else float("nan") for a, r in zip(after, rows)],
            "min_after_over_sin": min(after) / sin_scale if sin_scale else float("nan"),
            "after_spread": (max(after) - min(after)) / mean_after if mean_after else 0.0,
        }
        logger.info("galilean: slope %.4f, spread %.2e", summary["slope_before"], summary["after_spread"])
        return self.manifest(params, summary)
