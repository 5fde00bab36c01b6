"""Exception hierarchy and enumeration budget."""

import os


DEFAULT_BUDGET = 2_000_000


class IflabError(Exception):
    """Base class for every error raised by iflab."""


class ValidationError(IflabError, ValueError):
    """Input does not describe a valid system."""


class ParseError(ValidationError):
    """Configuration text could not be parsed."""


class DimensionMismatch(ValidationError):
    pass


class NotStronglyConnected(ValidationError):
    pass


class BadRatio(ValidationError):
    pass


class BadAxis(ValidationError):
    pass


class NotSmall(ValidationError):
    pass


class Reducible(ValidationError):
    pass


class NotRegular(IflabError):
    pass


class NoRoot(IflabError, ValueError):
    pass


class NonConvergence(IflabError, RuntimeError):
    pass


class BudgetExceeded(IflabError):
    pass


def enumeration_budget(default=DEFAULT_BUDGET):
    """Word-enumeration cap; ``IFLAB_BUDGET`` overrides the default."""
    raw = os.environ.get("IFLAB_BUDGET")
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(float(raw))
    except ValueError:
        raise ValidationError(f"IFLAB_BUDGET must be a number, got {raw!r}")
    if value < 1:
        raise ValidationError("IFLAB_BUDGET must be positive")
    return value
