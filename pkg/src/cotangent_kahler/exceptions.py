"""Exception types raised across the package."""


class DomainViolation(ValueError):
    """A point lies outside the region where a structure is defined.

    Raised for chart points outside the conformal chart, for division by
    zero inside a jet-evaluated field, and for cotangent points where the
    lifted metric stops being positive definite.
    """


class FrameMismatchError(ValueError):
    """Tensors expressed in different frames were combined."""


class PreconditionError(ValueError):
    """An operation was called outside its documented contract."""


class ConfigError(ValueError):
    """Invalid run configuration."""
