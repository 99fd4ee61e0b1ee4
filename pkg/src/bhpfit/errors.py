"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class BhpFitError(Exception):
    exit_code = 1


class ParseError(BhpFitError, ValueError):
    """Malformed or invalid input data."""

    exit_code = 3


class NumericError(BhpFitError, ArithmeticError):
    """A numerical procedure failed or received degenerate input."""

    exit_code = 4
