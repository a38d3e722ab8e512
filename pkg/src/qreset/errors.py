"""Exception hierarchy.

`ValidationError` subclasses describe bad input and map to CLI exit code 2,
all other `QResetError` subclasses are runtime failures (exit code 1).
"""
from typing import Optional, Union
from pathlib import Path


class QResetError(Exception):
    pass


class ValidationError(QResetError, ValueError):
    pass


class ConfigError(ValidationError):
    def __init__(
        self,
        message: str,
        path: Union[str, Path, None] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        self.path = path
        self.line = line
        self.column = column
        if path is not None and line is not None:
            message = f'{path}:{line}:{column}: {message}'
        elif path is not None:
            message = f'{path}: {message}'
        super().__init__(message)


class InvalidSystemSpec(ValidationError):
    pass


class InvalidCaseSelector(ValidationError):
    pass


class NegativeBeta(ValidationError):
    pass


class InvalidCoupling(ValidationError):
    pass


class InvalidEpsilon(ValidationError):
    pass


class WrongAncillaDim(ValidationError):
    pass


class SumMismatch(ValidationError):
    pass


class InvalidAncillaState(ValidationError):
    pass


class NotHermitian(QResetError):
    pass


class NotUnitary(QResetError):
    pass


class NotDensity(QResetError):
    pass


class NotAntiHermitian(QResetError):
    pass


class DimensionMismatch(QResetError):
    pass


class DecompositionFailure(QResetError):
    pass


class NoResonance(QResetError):
    pass


class NoDressedForm(QResetError):
    pass


class NoPurification(QResetError):
    pass


class SingularAngleConfiguration(QResetError):
    pass


class AncillaNotThermal(QResetError):
    pass


class PulseTooShort(QResetError):
    pass


class InvariantViolation(QResetError):
    pass
