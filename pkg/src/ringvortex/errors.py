"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class ConfigError(ValueError):
    """A configuration value violates one of its invariants."""


class SingularityError(ArithmeticError):
    """The observation point coincides with an emitter."""


class UndefinedPolarizationError(ArithmeticError):
    """Polarization is undefined because the field vanishes."""


class UnsupportedCaseError(ValueError):
    """No closed form is tabulated for the requested parameters."""


class WindingResolutionError(RuntimeError):
    """Phase steps around the loop are too large to unwrap reliably."""
