"""
Error hierarchy.

Every error carries the exit code the command line reports for it; library code only
raises, `specflow.main` is the single place that turns errors into exit codes.
"""

from typing import Optional


class SpecflowError(Exception):
    exit_code: int = 2

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ParameterError(SpecflowError):
    pass


class ParseError(SpecflowError):
    pass


class SpaceMismatchError(ParameterError):
    exit_code = 3


class SizeError(SpecflowError):
    pass


class UnsupportedNormError(SpecflowError):
    pass


class ContainmentError(SpecflowError):
    pass


class DomainError(SpecflowError):
    pass


class AmbiguityError(SpecflowError):
    def __init__(self, message: str, candidates: Optional[tuple] = None):
        super().__init__(message)
        self.candidates = candidates


class ResolutionError(SpecflowError):
    exit_code = 4

    def __init__(self, message: str, index: Optional[int] = None):
        if index is not None:
            message = f"{message} (step index {index})"
        super().__init__(message)
        self.index = index


class ConsistencyError(SpecflowError):
    exit_code = 4


class NormalityError(SpecflowError):
    pass


class NumericError(SpecflowError):
    exit_code = 4
