"""Shared exception types, mapped to CLI exit codes in cli.py."""


class ValidationError(ValueError):
    """Bad input data or configuration (CLI exit code 2)."""


class NumericError(ArithmeticError):
    """Non-finite value surfaced during computation (CLI exit code 3)."""
