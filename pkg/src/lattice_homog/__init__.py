"""Random-coefficient linear chain: exact dynamics, homogenized ansatz, error metrics."""
from .lattice import CoefficientField, LatticeState

__all__ = ["CoefficientField", "LatticeState"]
__version__ = "0.1.0"
