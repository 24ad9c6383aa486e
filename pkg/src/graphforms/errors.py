"""Exception types shared across the package."""


class GraphFormsError(Exception):
    """Base class for package errors."""


class InputError(GraphFormsError, ValueError):
    """Malformed graph data, parameters or spec files."""


class HorizonError(GraphFormsError, RuntimeError):
    """A computation needed vertices beyond the materialized horizon."""


class SolverError(GraphFormsError, RuntimeError):
    """A linear solve or propagation missed its accuracy contract."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
