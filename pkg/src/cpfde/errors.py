"""Exception types shared across the package."""


class CpfdeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CpfdeError, ValueError):
    """Invalid user-supplied configuration."""


class DimensionError(CpfdeError, ValueError):
    """Shapes or sizes that violate a structural precondition."""


class ConstraintViolation(CpfdeError, ValueError):
    """A value outside the feasible region of an optimization problem."""


class SizeGuardError(CpfdeError, ValueError):
    """Dense-path instance exceeds the configured size cap."""


class UnsupportedResolutionError(CpfdeError, ValueError):
    """Quantizer bit depth outside the supported range."""
