"""Exception hierarchy shared across the package."""


class SurrogateError(Exception):
    """Base class for all package errors."""


class ResourceError(SurrogateError):
    """A size cap (qubits, grid points) would be exceeded."""


class DatasetError(SurrogateError, ValueError):
    """Malformed or degenerate dataset input."""


class OptimizerError(SurrogateError, RuntimeError):
    """Training diverged or produced a non-finite loss."""


class PropertyViolation(SurrogateError, AssertionError):
    """An asserted statistical or ordering property did not hold."""

    def __init__(self, prop: str, detail: str = ""):
        self.prop = prop
        super().__init__(f"{prop}: {detail}" if detail else prop)
