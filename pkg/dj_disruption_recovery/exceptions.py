"""
Error hierarchy for dj-disruption-recovery.

Every error belongs to one of three categories. The management commands map
the category to a process exit code, so callers can tell bad input apart from
invalid configuration and from data that cannot support a statistic.
"""


class DisruptionRecoveryError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InputError(DisruptionRecoveryError):
    """The supplied data is missing, empty, or cannot be paired."""

    exit_code = 2


class EmptyInputError(InputError):
    pass


class PairingError(InputError):
    """Baseline and intervention records do not line up by task and seed."""

    def __init__(self, message, mismatches=None):
        super().__init__(message)
        self.mismatches = list(mismatches or [])


class SeedingError(InputError):
    pass


class ConfigValidationError(DisruptionRecoveryError):
    """
    A configuration value is invalid.

    ``location`` is the dotted path of the offending field when known
    (e.g. ``mechanism.recovery_prob``).
    """

    exit_code = 3

    def __init__(self, message, location=None):
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class ParameterError(ConfigValidationError):
    pass


class DegenerateStatisticsError(DisruptionRecoveryError):
    """The data is well formed but the requested statistic is not defined on it."""

    exit_code = 4


class DegenerateFitError(DegenerateStatisticsError):
    pass


class UndefinedMetricError(DegenerateStatisticsError):
    pass
