"""Exception types. Every user-facing error carries a stable diagnostic code."""
from __future__ import annotations


class QualError(Exception):
    code = "E-INTERNAL"

    @property
    def kind(self) -> str:
        return type(self).__name__


# --- lattices --------------------------------------------------------------

class LatticeError(QualError):
    code = "E-LATTICE"


class NotAPartialOrder(LatticeError):
    def __init__(self, a, b):
        super().__init__(f"order has a cycle through {a!r} and {b!r}")


class NoMeetOrJoin(LatticeError):
    def __init__(self, a, b):
        super().__init__(f"elements {a!r} and {b!r} lack a least upper or greatest lower bound")
        self.pair = (a, b)


class Unbounded(LatticeError):
    def __init__(self, name):
        super().__init__(f"lattice {name!r} has no global top or bottom")


class DuplicateLabel(LatticeError):
    def __init__(self, label):
        super().__init__(f"duplicate element label {label!r}")


class UnknownElement(LatticeError):
    def __init__(self, label, lattice_name=None):
        where = f" in lattice {lattice_name!r}" if lattice_name else ""
        super().__init__(f"unknown element {label!r}{where}")
        self.label = label


class LatticeFormatError(LatticeError):
    pass


# --- static checking -------------------------------------------------------

class CheckError(QualError):
    """A term or judgment was rejected by a checker."""

    code = "E-TYPE"

    def __init__(self, message: str, at=None):
        super().__init__(message)
        self.at = at


class IllFormed(CheckError):
    code = "E-ILLFORMED"


class UnboundVariable(CheckError):
    code = "E-UNBOUND"


class TypeMismatch(CheckError):
    code = "E-TYPE"


class QualifierNotSubqualified(CheckError):
    code = "E-SUBQUAL"


class BoundViolation(CheckError):
    code = "E-BOUND"


class WriteToReadonly(CheckError):
    code = "E-READONLY"


class ColourViolation(CheckError):
    code = "E-COLOUR"


class CaptureNotCovered(CheckError):
    code = "E-CAPTURE"


class GenerationExhausted(QualError):
    code = "E-GENERATE"


# --- evaluation ------------------------------------------------------------

class Stuck(QualError):
    """Reduction cannot proceed from a non-value."""

    code = "E-STUCK"

    def __init__(self, message: str, term=None):
        super().__init__(message)
        self.term = term


class AssertFailed(Stuck):
    code = "E-ASSERT"


class UpqualFailed(Stuck):
    code = "E-UPQUAL"


class NonGroundTag(Stuck):
    code = "E-NONGROUND"


class SealedWrite(Stuck):
    code = "E-SEALED"


class DanglingLocation(Stuck):
    code = "E-DANGLING"


class BarrierViolation(Stuck):
    code = "E-BARRIER"


class StuckIllFormed(Stuck):
    code = "E-STUCK"


class OutOfFuel(QualError):
    """Evaluation did not reach a value within the step budget."""

    code = "E-FUEL"


# --- frontend --------------------------------------------------------------

class ParseError(QualError):
    code = "E-SYNTAX"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(message)
        self.line = line
        self.column = column


class PragmaError(ParseError):
    code = "E-PRAGMA"


class UsageError(QualError):
    code = "E-USAGE"
