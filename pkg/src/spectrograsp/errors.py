"""Exception types shared across the toolkit.

All three subclass ValueError so callers who do not care about the
distinction can catch one base type. The CLI maps them to exit codes
(validation -> 2, format/IO -> 3, numerical -> 4).
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class NumericalError(ValueError):
    """The computation is undefined for the given data, e.g. a zero-norm
    spectrum or a nonpositive reference signal."""


class FormatError(ValueError):
    """A data file is malformed. Carries file path and line context."""

    def __init__(self, path: object, message: str, line: int | None = None) -> None:
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")
