"""Exception types raised across the package."""


class NNCVError(Exception):
    """Base class for all package errors."""


class HeavisideNotDifferentiable(NNCVError, ValueError):
    pass


class DegenerateLines(NNCVError, ValueError):
    pass


class EmptyInput(NNCVError, ValueError):
    pass


class PatternLengthMismatch(NNCVError, ValueError):
    pass


class NonPartition(NNCVError, ValueError):
    pass


class EmptyBatch(NNCVError, ValueError):
    pass


class ShapeMismatch(NNCVError, ValueError):
    pass


class ConfigInvalid(NNCVError, ValueError):
    pass


class EmptyDataset(NNCVError, ValueError):
    pass


class UnsupportedPhases(NNCVError, ValueError):
    pass


class UnstableStep(NNCVError, RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"level-set field became non-finite at step {step}")
        self.step = step


class InvalidDims(NNCVError, ValueError):
    pass


class MalformedFile(NNCVError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedFormat(NNCVError, ValueError):
    pass


class VersionMismatch(NNCVError, ValueError):
    pass


class SchemaError(NNCVError, KeyError):
    def __init__(self, field: str):
        super().__init__(field)
        self.field = field

    def __str__(self):
        return self.field


class DimMismatch(NNCVError, ValueError):
    pass
