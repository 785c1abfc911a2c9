from typing import Optional

import numpy as np

from ..spectral import LineField, LineGrid, line_norms, line_product, x_derivative
from ..types import NormReport
from .base import BaseEquation


class KdV5Equation(BaseEquation):
    """d_t u = d_x^5 u - u d_x u on T: the y-independent reduction of the KP5 flow."""

    grid: LineGrid

    @property
    def name(self) -> str:
        return "kdv5"

    def dispersion(self) -> np.ndarray:
        return self.grid.m**5

    def nonlinear(self, coefficients: np.ndarray) -> np.ndarray:
        u = LineField(coefficients, self.grid)
        return -0.5 * x_derivative(line_product(u, u), 1).coefficients

    def wrap(self, coefficients: np.ndarray) -> LineField:
        return LineField(coefficients, self.grid)

    def invariants(self, coefficients: np.ndarray, sigma: float, tolerance: Optional[float] = None) -> NormReport:
        return line_norms(self.wrap(coefficients), sigma, tolerance)
