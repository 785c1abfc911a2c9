from typing import Optional

import numpy as np

from ..spectral import SpectralField, TorusGrid, norms, product, x_derivative
from ..types import NormReport
from .base import BaseEquation


class KP5Equation(BaseEquation):
    """d_t u - d_x^5 u - d_x^{-1} d_y^2 u + u d_x u = 0 on T x (1/lambda)T."""

    grid: TorusGrid

    @property
    def name(self) -> str:
        return "kp5"

    def dispersion(self) -> np.ndarray:
        m = self.grid.m
        safe = np.where(m > 0, m, 1.0)
        ky = (self.grid.lam * self.grid.k) ** 2
        return np.where(m > 0, safe**5 + ky / safe, 0.0)

    def nonlinear(self, coefficients: np.ndarray) -> np.ndarray:
        u = SpectralField(coefficients, self.grid)
        return -0.5 * x_derivative(product(u, u, "truncate"), 1).coefficients

    def wrap(self, coefficients: np.ndarray) -> SpectralField:
        return SpectralField(coefficients, self.grid)

    def invariants(self, coefficients: np.ndarray, sigma: float, tolerance: Optional[float] = None) -> NormReport:
        return norms(self.wrap(coefficients), sigma, tolerance)
