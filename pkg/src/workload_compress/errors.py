"""Exception hierarchy.

Errors split into two families so the command line can map them to exit
codes: ``ConfigError`` (bad parameters, exit 1) and ``DataError`` (bad or
inconsistent input data, exit 2).
"""


class WorkloadError(ValueError):
    """Base class for every error raised by this package."""


class ConfigError(WorkloadError):
    pass


class DataError(WorkloadError):
    pass


class UnknownFeature(ConfigError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return ValueError.__str__(self)


class InvalidBounds(ConfigError):
    pass


class InvalidEpsilon(ConfigError):
    pass


class InvalidGamma(ConfigError):
    pass


class InvalidK(ConfigError):
    pass


class ParseError(DataError):
    pass


class MissingStatistic(DataError):
    pass


class SchemaError(DataError):
    pass


class EmptyWorkload(DataError):
    pass


class NotASubset(DataError):
    pass


class TargetSupportViolation(DataError):
    pass


class NotNormalizable(DataError):
    pass


class ZeroCostWorkload(DataError):
    pass


class NonPositiveCost(DataError):
    pass


class SpecMismatch(DataError):
    pass


class IncompleteCoverage(DataError):
    pass
