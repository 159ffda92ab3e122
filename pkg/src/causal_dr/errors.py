"""Exception hierarchy shared across the package."""


class CausalDRError(Exception):
    """Base class for package errors."""


class ParameterError(CausalDRError, ValueError):
    """Invalid parameter value or array shape."""


class DegenerateDesignError(CausalDRError, RuntimeError):
    """A generated or resampled dataset kept producing an empty treatment arm."""


class FitError(CausalDRError, RuntimeError):
    """A nuisance model could not be fitted, even after the ridge fallback."""


class ContractError(CausalDRError, ValueError):
    """Inputs violate an estimator precondition (e.g. untruncated scores)."""


class DataError(CausalDRError, ValueError):
    """Malformed input file: missing column, bad cell, non-binary treatment."""
