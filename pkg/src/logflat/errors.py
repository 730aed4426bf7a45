"""Error taxonomy shared by the library and the CLI exit-code mapping."""


class LogflatError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LogflatError):
    """Invalid configuration or CLI usage. CLI exit code 1."""


class InputError(LogflatError):
    """Unreadable, empty, or undecodable input. CLI exit code 2."""


class ProcessingError(LogflatError):
    """Data could not be processed under the active policy. CLI exit code 3."""


class ParseError(ProcessingError):
    """A line is not one well-formed JSON document."""

    def __init__(self, message, line_number=0):
        super().__init__(message)
        self.line_number = line_number


class StructureError(ParseError):
    """The top level of a record is not a JSON object."""


class DepthError(ParseError):
    """Record nesting exceeds the configured maximum depth."""


class ClassificationConflictError(ProcessingError):
    """One field path mixes fundamental kinds (object vs array vs scalar)."""

    def __init__(self, path, detail=""):
        msg = f"conflicting kinds at path {path!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.path = path


class FlattenError(ProcessingError):
    """A record cannot be flattened against the active registry."""


class KindError(ProcessingError):
    """A frame operation was applied to a column of the wrong kind."""


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_PROCESSING = 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, LogflatError):
        return EXIT_PROCESSING
    return EXIT_PROCESSING
