from typing import Optional


class SolverException(Exception):
    """
    Base error for the solver library.

    Carries a human readable detail and the exit code the CLI reports for it,
    the same way route handlers pair a detail with a status code.
    """

    exit_code: int = 3

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class InvalidInputError(SolverException):
    exit_code = 1


class ConfigError(SolverException):
    exit_code = 1


class DomainError(SolverException):
    """Raised when a closed-form bound is evaluated outside its domain"""
    exit_code = 3


class InfeasibleError(SolverException):
    exit_code = 3


class NumericError(SolverException):
    exit_code = 3


class DisconnectedGraphError(SolverException):
    exit_code = 3


class InsufficientDataError(SolverException):
    exit_code = 3
