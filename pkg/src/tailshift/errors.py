"""Error types shared across the pipeline."""


class DataError(ValueError):
    """Input data or configuration failed validation."""


class NumericalError(RuntimeError):
    """An optimizer or quadrature routine failed to produce a usable result."""
