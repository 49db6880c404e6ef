"""Exception types shared across the package."""


class ConstraintViolation(ValueError):
    """A constructed object failed one of its normalization constraints."""


class NumericsError(RuntimeError):
    """A numeric routine failed to reach its target accuracy."""


class EnumerationLimitError(ValueError):
    """An exact computation was requested beyond the enumeration budget."""
