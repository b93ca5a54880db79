from __future__ import annotations


class SerError(Exception):
    """Base class for every error raised by the SER toolkit."""


class DomainError(SerError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(SerError, ArithmeticError):
    """A series or quadrature cannot converge (or did not within its budget)."""

    def __init__(self, message: str, **diagnostics: object) -> None:
        super().__init__(message)
        self.diagnostics = dict(diagnostics)

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} ({details})"


class ContractError(SerError, ValueError):
    """A parameter object or configuration violates its invariants."""


class UsageError(SerError):
    """Command-line misuse: unknown preset, malformed flag, bad config file."""


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (UsageError, ContractError)):
        return EXIT_USAGE
    if isinstance(exc, (DomainError, ConvergenceError)):
        return EXIT_NUMERIC
    return EXIT_NUMERIC
