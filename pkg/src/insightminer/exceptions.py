"""Exception hierarchy shared across the package."""


class InsightMinerError(Exception):
    """Base class for every error raised by insightminer."""


class FormatError(InsightMinerError, ValueError):
    pass


class UnknownColumn(InsightMinerError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class IncompatibleMeasure(InsightMinerError, ValueError):
    pass


class LengthError(InsightMinerError, ValueError):
    pass


class DimensionMismatch(InsightMinerError, ValueError):
    pass


class NotNormalized(InsightMinerError, ValueError):
    pass


class TooFewGroups(InsightMinerError, ValueError):
    pass


class EmptyGroup(InsightMinerError, ValueError):
    pass


class DomainError(InsightMinerError, ValueError):
    pass


class AllZero(InsightMinerError, ValueError):
    pass


class NegativeValues(InsightMinerError, ValueError):
    pass


class ZeroSum(InsightMinerError, ValueError):
    pass


class NotCount(InsightMinerError, ValueError):
    pass


class ZeroTotal(InsightMinerError, ValueError):
    pass


class EmptyAvailable(InsightMinerError, ValueError):
    pass


class AllNull(InsightMinerError, ValueError):
    pass


class NoAvailableColumns(InsightMinerError, ValueError):
    pass


class InapplicablePattern(InsightMinerError, ValueError):
    pass


class NoEligiblePairs(InsightMinerError, ValueError):
    pass


class ProviderError(InsightMinerError, RuntimeError):
    """An LLM or embedding backend failed or returned an unusable payload."""


class ConfigError(InsightMinerError, ValueError):
    pass
