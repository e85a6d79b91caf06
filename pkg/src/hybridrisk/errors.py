"""Exception hierarchy.

Every error maps onto one of three process exit codes used by the command
line: configuration problems (2), data problems (3) and leakage-guard
violations (4).
"""


class HybridRiskError(Exception):
    exit_code = 1


class ConfigError(HybridRiskError, ValueError):
    exit_code = 2


class DataError(HybridRiskError, ValueError):
    exit_code = 3


class LeakageError(HybridRiskError):
    """Raised when a fitting or resampling step sees non-training rows."""

    exit_code = 4


class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column: {name!r}")
        self.name = name


class OutcomeNotBinary(DataError):
    def __init__(self, row, value=None):
        super().__init__(f"outcome not in {{0, 1}} at data row {row}: {value!r}")
        self.row = row


class EmptyFile(DataError):
    pass


class ClassAbsent(DataError):
    pass


class ConstantOutcome(DataError):
    pass


class EmptyTrain(DataError):
    pass


class UnseenCategory(DataError):
    def __init__(self, column, token):
        super().__init__(f"unseen category {token!r} in column {column!r}")
        self.column = column
        self.token = token


class UnmappableColumn(DataError):
    pass


class UnitMismatch(DataError):
    pass


class SchemaDrift(DataError):
    pass


class CorruptFile(DataError):
    pass


class VersionMismatch(DataError):
    pass


class MissingReports(DataError):
    pass


class DimensionMismatch(HybridRiskError, ValueError):
    pass


class SingleClass(HybridRiskError, ValueError):
    pass


class NoPositives(HybridRiskError, ValueError):
    pass


class DegenerateScores(HybridRiskError, ValueError):
    pass


class SeparationDetected(HybridRiskError, ArithmeticError):
    pass


class MinorityTooSmall(HybridRiskError, ValueError):
    pass


class MetricUndefinedOnResample(HybridRiskError, ValueError):
    pass
