"""Pilot-less sparse superposition coding over Zadoff-Chu quasi-orthogonal dictionaries."""

from .errors import CapacityError, ConfigError, DecodeInvalidError, ParameterError

__version__ = "0.1.0"

__all__ = ["CapacityError", "ConfigError", "DecodeInvalidError", "ParameterError"]
