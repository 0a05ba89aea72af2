"""Exception types raised across the package."""


class CoveringError(ValueError):
    """Invalid group covering; ``group`` is the 1-based offending group, if any."""

    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class DimensionError(ValueError):
    pass


class FactorizationError(ArithmeticError):
    pass


class ConvergenceError(RuntimeError):
    """An iterative method stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, n_iter=None):
        super().__init__(message)
        self.residual = residual
        self.n_iter = n_iter


class DivergenceError(RuntimeError):
    pass


class LineSearchError(RuntimeError):
    def __init__(self, message, step=None, grad_norm=None):
        super().__init__(message)
        self.step = step
        self.grad_norm = grad_norm


class StepSizeError(ValueError):
    pass


class UnsupportedMeasureError(ValueError):
    pass


class OuterLoopError(RuntimeError):
    """AdaDROPS ran out of outer rounds; ``active`` holds the last group set."""

    def __init__(self, message, active=None):
        super().__init__(message)
        self.active = active


class ParseError(ValueError):
    def __init__(self, message, lineno=None):
        super().__init__(message)
        self.lineno = lineno
