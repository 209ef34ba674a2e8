"""Exception hierarchy.

Validation problems (bad input, bad configuration) map to CLI exit code 2,
numerical failures (under-resolution, failed solves) to exit code 3.
"""


class ValidationError(ValueError):
    """Invalid input or configuration."""


class NotInteriorError(ValidationError):
    """A point that must lie strictly inside the domain does not."""


class NumericalError(RuntimeError):
    """A computation could not be carried out to the requested accuracy."""

    hint = ""


class ResolutionCapError(NumericalError):
    hint = "increase eps or raise the node cap"


class SolveError(NumericalError):
    hint = "check the domain or increase the resolution"
