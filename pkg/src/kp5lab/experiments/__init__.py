from .base import BaseExperiment
from .compare import CompareExperiment
from .galilean import GalileanExperiment
from .thm1 import Thm1Experiment

__all__ = ["BaseExperiment", "CompareExperiment", "GalileanExperiment", "Thm1Experiment"]
