"""Exception types shared across the package."""


class BlimeError(Exception):
    """Base class for all errors raised by this package."""


class InputError(BlimeError):
    """Invalid caller-supplied data: instances, masks, files, indices."""


class ConfigError(BlimeError):
    """Invalid or inconsistent run configuration."""


class ProtocolError(BlimeError):
    """An external predictor misbehaved: spawn failure, handshake timeout,
    malformed reply, or premature exit."""
