"""Exception taxonomy shared across the toolkit.

Every error the library raises on purpose derives from FigpatError so
callers (and the CLI exit-code table) can branch on one base class.
Figure-validity problems are *data*, not exceptions; see
model.validate_figure.
"""
from __future__ import annotations


class FigpatError(Exception):
    """Base class for all deliberate toolkit errors."""


class ConfigError(FigpatError):
    """A configuration value violates its documented invariant."""


class StatementError(FigpatError):
    """Base class for statement-language failures (all parse-time)."""


class StatementSyntaxError(StatementError):
    """Malformed statement text; carries 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class StatementTypeError(StatementError):
    """Well-formed tokens, ill-typed statement: bad vocabulary, a count
    compared to a non-count, an undeclared or duplicate variable."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        if line:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class PlacementExhausted(FigpatError):
    """Rejection placement ran out of retries; the universe is over-dense."""


class YieldTooLow(FigpatError):
    """Acceptance rate of rejection sampling fell below the configured floor."""


class GeneratorUnsound(FigpatError):
    """A registered constructive generator emitted a figure that fails
    its own pattern's statement; always a generator bug."""


class NoNearMissFound(FigpatError):
    """Near-miss search exhausted its budget without flipping the statement."""


class InvalidAlpha(FigpatError):
    """Chernoff order parameter outside the open interval (0, 1)."""


class UnknownStatementId(FigpatError):
    """A record references a statement id the dataset does not define."""


class Infeasible(FigpatError):
    """No train/test split can satisfy the requested divergence constraints."""


class IoFailure(FigpatError):
    """Filesystem read/write failed while handling a dataset."""


class LabelInconsistency(FigpatError):
    """A record's stored label contradicts re-evaluation of its statement."""


class ParseFailure(FigpatError):
    """A dataset file (manifest, statements, config) could not be parsed."""

    def __init__(self, message: str, path: str = "", line: int = 0):
        where = ""
        if path:
            where = f" [{path}" + (f":{line}" if line else "") + "]"
        super().__init__(message + where)
        self.path = path
        self.line = line


class MissingStatement(FigpatError):
    """A challenge that requires a user-supplied statement got none."""
