"""Error types shared by all toolchain stages.

Every error carries a stable diagnostic code; diagnostics render as
``file:line:col: error[CODE]: message`` when a source span is known.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class QgrtError(Exception):
    code = "Internal"

    def __init__(self, message: str, span: Span | None = None):
        self.message = message
        self.span = span
        super().__init__(self.render())

    def render(self) -> str:
        prefix = f"{self.span}: " if self.span is not None else ""
        return f"{prefix}error[{self.code}]: {self.message}"


# -- frontend ---------------------------------------------------------------

class LexError(QgrtError):
    code = "LexError"


class ParseError(QgrtError):
    code = "ParseError"


class UnresolvedImport(QgrtError):
    code = "UnresolvedImport"


class AmbiguousName(QgrtError):
    code = "AmbiguousName"


class QTypeError(QgrtError):
    code = "TypeError"


class TimingOnClassical(QgrtError):
    code = "TimingOnClassical"


class ArityError(QgrtError):
    code = "ArityError"


# -- platform config --------------------------------------------------------

class ConfigSyntax(QgrtError):
    code = "ConfigSyntax"


class ConfigSemantic(QgrtError):
    code = "ConfigSemantic"


class NoUnitary(QgrtError):
    code = "NoUnitary"


# -- middle end --------------------------------------------------------------

class ArgTypeError(QgrtError):
    code = "ArgTypeError"


class StepBudgetExceeded(QgrtError):
    code = "StepBudgetExceeded"


class DivisionByZero(QgrtError):
    code = "DivisionByZero"


class TooManyQubits(QgrtError):
    code = "TooManyQubits"


class Unsupported(QgrtError):
    """A construct the control-processor target cannot realize (e.g. dynamic
    division, dynamic array index)."""
    code = "Unsupported"


class Infeasible(QgrtError):
    code = "Infeasible"


# -- codegen ------------------------------------------------------------------

class UnencodableImmediate(QgrtError):
    code = "UnencodableImmediate"


class UnsupportedReturn(QgrtError):
    code = "UnsupportedReturn"


class RegisterSpill(QgrtError):
    code = "RegisterSpill"


class AsmSyntax(QgrtError):
    code = "AsmSyntax"


class UndefinedLabel(QgrtError):
    code = "UndefinedLabel"


# -- VM ------------------------------------------------------------------------

class VmError(QgrtError):
    code = "VmError"


class FmrBeforeMeasure(VmError):
    code = "FmrBeforeMeasure"


class IllegalInstruction(VmError):
    code = "IllegalInstruction"


class MemoryOutOfRange(VmError):
    code = "MemoryOutOfRange"


class CycleBudgetExceeded(VmError):
    code = "CycleBudgetExceeded"


# -- runtime --------------------------------------------------------------------

class EncodeTypeMismatch(QgrtError):
    code = "EncodeTypeMismatch"


class DecodeTruncated(QgrtError):
    code = "DecodeTruncated"


class DecodeBadOffset(QgrtError):
    code = "DecodeBadOffset"


class NotCompleted(QgrtError):
    code = "NotCompleted"


class UnknownKernelOp(QgrtError):
    code = "UnknownKernelOp"
