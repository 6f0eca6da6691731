"""Error taxonomy for the bridge, mirrored onto CLI exit codes.

``ConfigError`` -> exit 2 (bad flags/settings, unavailable encoder);
``FormatError``/``DataError`` -> exit 3 (malformed or unreadable inputs).
"""

from __future__ import annotations


class BridgeError(Exception):
    """Base class for all clip_bridge errors."""


class ConfigError(BridgeError):
    """Invalid configuration value or unusable encoder selection."""


class FormatError(BridgeError):
    """A structured input (prompt file, manifest, EMB1) violates its format."""


class DataError(BridgeError):
    """Well-formed input with unusable content (unreadable image, bad values)."""


class EncoderError(ConfigError):
    """The requested encoder backend cannot be constructed."""
