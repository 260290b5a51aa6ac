"""Symmetric-gradient p-Laplace laboratory: nonlinearity laws, pointwise tensor
identities, a Q1 finite element solver and stress-regularity probes."""
from .errors import (ConvergenceError, DegenerateRegionError, DomainError, LinearSolverError,
                     QuadratureError, SymgradError)
from .orlicz import NonlinearityLaw, LawKind

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "DegenerateRegionError", "DomainError", "LawKind",
           "LinearSolverError", "NonlinearityLaw", "QuadratureError", "SymgradError"]
