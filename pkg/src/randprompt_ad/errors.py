"""Exception hierarchy shared across the toolkit.

The command-line interface maps these onto process exit codes:
configuration problems exit with 2, data/format problems with 3 and
numeric or training failures with 4.
"""


class RandpromptError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RandpromptError):
    """A configuration value is missing, malformed or inconsistent."""


class StateError(RandpromptError):
    """An object was used in an order its lifecycle does not allow."""


class DataError(RandpromptError):
    """Input data is structurally valid but semantically unusable."""


class ManifestError(DataError):
    """A dataset manifest is malformed or inconsistent."""


class FormatError(DataError):
    """A file does not follow the expected on-disk format."""


class CorruptionError(FormatError):
    """A file follows the expected format but its payload is truncated
    or otherwise inconsistent with its own header."""


class TrainingError(RandpromptError):
    """Training diverged or produced non-finite values."""


class MetricError(RandpromptError):
    """A metric is undefined for the given inputs."""
