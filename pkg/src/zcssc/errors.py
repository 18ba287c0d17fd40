class ParameterError(ValueError):
    """Argument outside the domain of an operation."""


class CapacityError(ValueError):
    """Requested payload does not fit the dictionary."""


class DecodeInvalidError(ValueError):
    """Decoder output does not index a legal message."""


class ConfigError(ValueError):
    """Malformed or inconsistent simulation configuration."""
