"""Weyl-Titchmarsh spectral theory for matrix Schroedinger operators ``-d^2/dx^2 + V``."""
from .errors import WeylError
from .fullline import FullLineWeyl, half_line_pair
from .halfline import WeylFunction, m_function, weyl_solution
from .herglotz import MatrixMeasure, assemble_measure, stieltjes_invert
from .matfun import BoundaryCondition
from .potential import (ConstantMatrix, CoupledChannel, DiagonalWells, Free, PiecewiseConstant,
                        Potential, SampledTable)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition", "ConstantMatrix", "CoupledChannel", "DiagonalWells", "Free",
    "FullLineWeyl", "MatrixMeasure", "PiecewiseConstant", "Potential", "SampledTable",
    "WeylError", "WeylFunction", "assemble_measure", "half_line_pair", "m_function",
    "stieltjes_invert", "weyl_solution",
]
