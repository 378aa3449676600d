"""Exception and warning types shared across the toolkit."""


class GanderError(Exception):
    """Base class for all toolkit errors."""


class FormatError(GanderError):
    """A field's text could not be parsed; carries the offending substring."""

    def __init__(self, message: str, text: str = ""):
        super().__init__(message)
        self.text = text


class SchemaError(GanderError):
    """Input file is missing a mandatory column or has an unusable header."""


class EncodeError(GanderError):
    """A message field exceeds the range encodable in a frame."""


class SpecError(GanderError):
    """A scenario specification is invalid (e.g. colliding injections)."""


class UsageError(GanderError):
    """An operation was called with arguments outside its contract."""


class QuerySyntaxError(GanderError):
    """Filter query text failed to parse; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class QueryTypeError(GanderError):
    """Filter query is well-formed but ill-typed; names the subexpression."""

    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message}: {subexpr}")
        self.subexpr = subexpr


class BackendProtocolError(GanderError):
    """A remote analyst backend returned a reply that could not be parsed."""


class ConfigError(GanderError):
    """Run configuration is missing or inconsistent."""


class MonotonicityWarning(UserWarning):
    """Packet timestamps went backwards within a stream (possible midnight
    crossing or reordered capture); deltas are evaluated as-is."""
