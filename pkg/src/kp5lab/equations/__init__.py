from .base import BaseEquation
from .kdv5 import KdV5Equation
from .kp5 import KP5Equation

__all__ = ["BaseEquation", "KP5Equation", "KdV5Equation"]
