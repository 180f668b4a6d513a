"""Error and diagnostic types shared across the pipeline.

Every error that can be triggered by user input derives from AnnocError and
carries a source position.  Internal invariant violations raise plain
AssertionError and are bugs.
"""

from __future__ import annotations

from dataclasses import dataclass


class AnnocError(Exception):
    """Base class for all user-facing errors."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


# --- lexing / parsing -----------------------------------------------------

class LexError(AnnocError):
    pass


class ParseError(AnnocError):
    def __init__(self, message, line=0, col=0, expected=()):
        super().__init__(message, line, col)
        self.expected = tuple(expected)


class UnsupportedFeature(AnnocError):
    def __init__(self, feature: str, line=0, col=0):
        super().__init__(f"unsupported C feature: {feature}", line, col)
        self.feature = feature


# --- annotation building ----------------------------------------------------

class AnnParseError(AnnocError):
    pass


class SortError(AnnocError):
    pass


class SpecError(AnnocError):
    pass


class MissingInvariant(AnnocError):
    def __init__(self, line=0, col=0):
        super().__init__("loop has no invariant annotation before it", line, col)


class AmbiguousInvariant(AnnocError):
    def __init__(self, count, line=0, col=0):
        super().__init__(f"{count} invariant annotations before one loop (at most 2 allowed)", line, col)


class SingleInvariantUnsupported(AnnocError):
    def __init__(self, line=0, col=0):
        super().__init__(
            "a single invariant needs either a skip increment or a continue-free body",
            line, col)


class BuildError(AnnocError):
    """Aggregates every diagnostic produced while building one program."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0]
        super().__init__("; ".join(str(d) for d in self.diagnostics),
                         getattr(first, "line", 0), getattr(first, "col", 0))


# --- symbolic execution -----------------------------------------------------

class UnboundProgVar(AnnocError):
    def __init__(self, name, line=0, col=0):
        super().__init__(f"program variable '{name}' has no value in the precondition", line, col)
        self.name = name


class NoChunk(AnnocError):
    def __init__(self, addr, fieldname, line=0, col=0):
        super().__init__(
            f"precondition owns no cell at '{addr}' for field '{fieldname}'", line, col)
        self.addr = addr
        self.fieldname = fieldname


class AmbiguousChunk(AnnocError):
    def __init__(self, addr, line=0, col=0):
        super().__init__(f"several heap chunks match address '{addr}'", line, col)


# --- verification strategy --------------------------------------------------

class StrategyStuck(AnnocError):
    def __init__(self, reason, line=0, col=0):
        super().__init__(f"no proof rule applies: {reason}", line, col)


class SymExecFailure(AnnocError):
    """Wraps an ae / norm error with the statement position it occurred at."""

    def __init__(self, cause: AnnocError, line=0, col=0):
        super().__init__(str(cause), line or cause.line, col or cause.col)
        self.cause = cause


class HoleMultiplyConstrained(AnnocError):
    def __init__(self, line=0, col=0):
        super().__init__(
            "statement needs a following assertion: several exits reach the omitted postcondition",
            line, col)


class HoleAlreadyInstantiated(AnnocError):
    def __init__(self, hole_id, line=0, col=0):
        super().__init__(f"postcondition hole ?{hole_id} instantiated twice", line, col)


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal finding reported by a checking pass."""

    code: str
    message: str
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: [{self.code}] {self.message}"
