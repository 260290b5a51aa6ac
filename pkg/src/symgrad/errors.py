"""Exception types shared across the package."""


class SymgradError(Exception):
    pass


class DomainError(SymgradError, ValueError):
    """An argument lies outside the set where an operation is defined."""


class QuadratureError(SymgradError, ArithmeticError):
    pass


class ConvergenceError(SymgradError, RuntimeError):
    """Newton iteration stopped without meeting its tolerance.

    The last iterate and the partial report are attached so callers can
    inspect or restart from them.
    """

    def __init__(self, message, iterate=None, report=None):
        super().__init__(message)
        self.iterate = iterate
        self.report = report


class LinearSolverError(SymgradError, RuntimeError):
    pass


class DegenerateRegionError(SymgradError, ValueError):
    """A measurement region contains no quadrature points or translations."""
