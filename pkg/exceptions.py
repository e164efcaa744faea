from typing import Optional


class ResidueEngineError(Exception):
    """Base class for every error the engine reports with a stable code."""

    code = "ENGINE_ERROR"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class RingMismatchError(ResidueEngineError):
    code = "RING_MISMATCH"


class ImageContextError(ResidueEngineError):
    code = "IMAGE_CONTEXT"


class NotPrimeError(ResidueEngineError):
    code = "NOT_PRIME"


class NotZeroDimensionalError(ResidueEngineError):
    code = "NOT_ZERO_DIMENSIONAL"


class NotCertifiedFreeError(ResidueEngineError):
    code = "NOT_CERTIFIED_FREE"


class DegreeMismatchError(ResidueEngineError):
    code = "DEGREE_MISMATCH"


class BlockViolationError(ResidueEngineError):
    code = "BLOCK_VIOLATION"


class NoCommonRefinementError(ResidueEngineError):
    code = "NO_COMMON_REFINEMENT"


class NotDominatingError(ResidueEngineError):
    code = "NOT_DOMINATING"


class LevelOverflowError(ResidueEngineError):
    code = "LEVEL_OVERFLOW"


class TwistMismatchError(ResidueEngineError):
    code = "WRONG_TWIST"


class IdentityCheckError(ResidueEngineError):
    """An exact identity the engine asserts on its own output did not hold."""

    code = "IDENTITY_CHECK"


class InvalidQueryError(ResidueEngineError):
    code = "INVALID_QUERY"


class MixedDegreeError(ResidueEngineError):
    code = "MIXED_DEGREE"


class UnknownVariableError(ResidueEngineError):
    code = "UNKNOWN_VARIABLE"


class ExpressionSyntaxError(ResidueEngineError):
    code = "SYNTAX_ERROR"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


# Error codes that mean the input itself was malformed (CLI exit code 2).
USAGE_ERROR_CODES = frozenset({
    ExpressionSyntaxError.code,
    MixedDegreeError.code,
    UnknownVariableError.code,
    InvalidQueryError.code,
})
