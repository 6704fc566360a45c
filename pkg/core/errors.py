from typing import Dict

from core.constants import Config


class CompilerError(Exception):
    exit_code = 1

    def __init__(self, message: str, error_type: str='unknown', details: Dict=None):
        self.error_type = error_type
        self.details = details or {}
        super().__init__(message)


class InputError(CompilerError):
    exit_code = Config.EXIT_INPUT_ERROR


class ParseError(InputError):

    def __init__(self, message: str, details: Dict=None):
        super().__init__(message, 'parse', details)


class DimensionError(InputError):

    def __init__(self, message: str, details: Dict=None):
        super().__init__(message, 'dimension', details)


class PlanningError(CompilerError):
    exit_code = Config.EXIT_PLAN_ERROR


class OrderReductionError(PlanningError):
    """Raised when a reduction step leaves a nonzero top-order part.

    ``residual`` holds the offending homogeneous polynomial.
    """

    def __init__(self, message: str, residual=None, details: Dict=None):
        self.residual = residual
        super().__init__(message, 'order_reduction', details)


class DecompositionError(PlanningError):

    def __init__(self, message: str, details: Dict=None):
        super().__init__(message, 'decomposition', details)


class VerificationError(CompilerError):
    exit_code = Config.EXIT_PLAN_ERROR


class FeedforwardError(CompilerError):
    exit_code = Config.EXIT_PLAN_ERROR


class CircuitFileError(CompilerError):
    exit_code = Config.EXIT_IO_ERROR


class SchemaVersionError(CircuitFileError):

    def __init__(self, found: str, expected: str):
        super().__init__(f'Circuit file schema version {found!r} does not match {expected!r}', 'schema_version', {'found': found, 'expected': expected})
