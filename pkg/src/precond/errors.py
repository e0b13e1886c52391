"""Exception hierarchy shared across the package."""


class PrecondError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PrecondError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ArityError(PrecondError):
    """A predicate was used with two different arities, or with bad arguments."""


class NonStratifiableError(PrecondError):
    """The program has a cycle through negation."""


class UnsupportedError(PrecondError):
    """Input is outside the supported fragment (non-linear program, existential
    constraint, hypothesis violation, ...).  Mapped to exit code 3 by the CLI."""


class BlowupError(UnsupportedError):
    """The rewriting exceeded the configured conjunct cap (the exponential
    blow-up case for constraints with many occurrences of the updated
    predicate)."""
