"""Exception hierarchy shared by all pipeline stages."""


class CncTransError(Exception):
    """Base class for every error raised by cnctrans."""


class GrammarError(CncTransError):
    """A `.mcg` grammar file is malformed or inconsistent."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class ParseError(CncTransError):
    """Input text does not conform to the active grammar."""

    def __init__(self, message, filename="<input>", line=0, column=0, expected=()):
        self.filename = filename
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        super().__init__(f"{filename}:{line}:{column}: {message}")


class MalformedNodeError(CncTransError):
    """An AST node violates the production it claims to instantiate."""


class DerivationError(CncTransError):
    """The base grammar cannot be turned into a transformation grammar."""


class CompileError(CncTransError):
    """A transformation module is syntactically valid but semantically broken."""


class EvaluationError(CncTransError):
    """A where-expression failed at match time."""


class RewriteError(CncTransError):
    """An edit could not be applied to the model."""


class StaleMatchError(RewriteError):
    """A match refers to nodes that are no longer part of the model."""


class CapExceededError(RewriteError):
    """A rule kept changing the model past the application cap."""

    def __init__(self, rule, cap):
        self.rule = rule
        self.cap = cap
        super().__init__(
            f"rule {rule!r} exceeded the application cap of {cap} (probable nontermination)"
        )
