from abc import ABC, abstractmethod
from functools import cached_property
from typing import Any, Optional

import numpy as np

from ..types import NormReport


class BaseEquation(ABC):
    """
    A dispersive equation d_t u_hat = i omega u_hat + N_hat(u) on a fixed grid.

    Work is done on half-spectrum coefficient arrays; `wrap` turns one back into a field.
    """

    def __init__(self, grid: Any) -> None:
        self.grid = grid

    @property
    @abstractmethod
    def name(self) -> str:
        """
        Returns the short name used in logs and manifests.
        """
        pass

    @abstractmethod
    def dispersion(self) -> np.ndarray:
        """
        Returns omega on the stored half spectrum (zero on the m = 0 column).
        """
        pass

    @abstractmethod
    def nonlinear(self, coefficients: np.ndarray) -> np.ndarray:
        """
        Evaluates N_hat(u) = -1/2 d_x(u^2) with dealiasing.

        Args:
            coefficients (np.ndarray): Half spectrum of u.

        Returns:
            np.ndarray: Half spectrum of N(u).
        """
        pass

    @abstractmethod
    def wrap(self, coefficients: np.ndarray) -> Any:
        """
        Returns the field object holding `coefficients` on this grid.
        """
        pass

    @abstractmethod
    def invariants(self, coefficients: np.ndarray, sigma: float, tolerance: Optional[float] = None) -> NormReport:
        """
        Returns the norm report (L2, E2, E^sigma, Hamiltonian) of a state.
        """
        pass

    @cached_property
    def omega(self) -> np.ndarray:
        return self.dispersion()

    @property
    def m_max(self) -> int:
        return int(self.grid.m_max)

    def max_abs(self, coefficients: np.ndarray) -> float:
        return float(np.max(np.abs(self.wrap(coefficients).to_physical())))

    def transport_dt(self, coefficients: np.ndarray, cfl: float) -> float:
        """cfl / (max|u| m_max); infinite for the zero state."""
        peak = self.max_abs(coefficients)
        if peak == 0.0:
            return float("inf")
        return cfl / (peak * self.m_max)
