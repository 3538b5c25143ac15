"""Exception hierarchy shared by every stage of the pipeline."""


class AspectSumError(Exception):
    """Base class for all package errors."""


class ValidationError(AspectSumError, ValueError):
    """An input violates a documented precondition."""


class ConfigurationError(AspectSumError):
    """A configuration value is missing, inconsistent, or out of range."""


class ParseError(AspectSumError):
    """A source file could not be parsed.

    ``path`` and ``offset`` locate the failure; ``offset`` is a line number for
    JSONL inputs and a character offset for JSON documents.
    """

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        where = ""
        if path is not None:
            where = f"{path}"
            if offset is not None:
                where += f":{offset}"
            where += ": "
        super().__init__(where + message)


class IntegrityError(AspectSumError):
    """Records are inconsistent with each other (duplicates, orphans, leaks)."""


class BackendError(AspectSumError):
    """A pluggable model backend is unavailable or failed."""


class DegenerateVectorError(ValidationError):
    """A vector has zero norm, so its direction is undefined."""


class EmptyCorpusError(ValidationError):
    """An operation that needs at least one meeting received none."""


class StageError(AspectSumError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
