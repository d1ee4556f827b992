"""Exception hierarchy shared by every csplift module."""

from typing import Any, Dict, Optional


class CspLiftError(Exception):
    """Base class for all csplift errors."""


class StructuralError(CspLiftError):
    """Signature, arity or shape mismatch between objects."""


class CapacityError(CspLiftError):
    """A configured size or search limit would be exceeded."""


class PreconditionError(CspLiftError):
    """A checked precondition of an operation does not hold."""


class UnsupportedError(CspLiftError):
    """The request is outside what the implementation supports."""


class ParseError(CspLiftError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")


class TheoremViolation(CspLiftError):
    """A brute-force check contradicted a statement that must always hold."""

    def __init__(self, statement: str, payload: Optional[Dict[str, Any]] = None):
        self.statement = statement
        self.payload = payload or {}
        super().__init__(f"THEOREM VIOLATION: {statement}")


class CostOverflowError(CspLiftError):
    """An exact cost left the signed 64-bit numerator/denominator range."""
