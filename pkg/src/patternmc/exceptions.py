"""Exception hierarchy shared across the package."""


class PatternMCError(Exception):
    """Base class for all errors raised by patternmc."""


class ModelError(PatternMCError, ValueError):
    """A model (chain, mixture, strategy) is malformed or inconsistent."""


class TraceFormatError(PatternMCError, ValueError):
    """A trace log could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnmappedEventError(TraceFormatError):
    def __init__(self, event, lineno=None):
        self.event = event
        super().__init__(f"event {event!r} is not mapped to any state", lineno)


class ZeroProbabilityError(PatternMCError, ArithmeticError):
    """An observed transition has probability zero under every pattern."""

    def __init__(self, user_id, position, source, target):
        self.user_id = user_id
        self.position = position
        self.pair = (source, target)
        super().__init__(
            f"user {user_id!r}, transition {position}: {source} -> {target} "
            "is impossible under all patterns (use smoothing > 0)"
        )


class FormulaError(PatternMCError, ValueError):
    """A formula is syntactically or semantically invalid."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownPropositionError(FormulaError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown atomic proposition {name!r}")


class EmptyFilterError(PatternMCError, ValueError):
    """No state satisfies a filter or restriction formula."""


class PrismParseError(PatternMCError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
