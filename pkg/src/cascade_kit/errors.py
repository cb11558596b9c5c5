"""Exception types shared across the toolkit."""


class CascadeKitError(Exception):
    """Base class for all toolkit errors."""


class ArgumentError(CascadeKitError, ValueError):
    """A caller violated an operation's precondition."""


class FormatError(CascadeKitError, ValueError):
    """A file or stream is structurally malformed."""


class UnsupportedEncodingError(FormatError):
    """A file is well-formed but uses an encoding we do not handle."""


class ConfigurationError(CascadeKitError, ValueError):
    """A config object combines parameters in an invalid way."""


class CodecError(CascadeKitError, RuntimeError):
    """A codec adapter failed while round-tripping audio."""


class AdapterError(CascadeKitError, RuntimeError):
    """A model adapter failed to produce a result."""
