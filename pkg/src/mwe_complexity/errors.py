"""Exception hierarchy.

Everything derived from :class:`DataError` is a problem with the inputs
(files, labels, resources) and maps to CLI exit code 2.
"""


class MweComplexityError(Exception):
    pass


class DataError(MweComplexityError):
    pass


class MalformedRow(DataError):
    def __init__(self, line, reason, path=None):
        self.line = line
        self.reason = reason
        self.path = path
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {reason}")


class SpanMismatch(DataError):
    def __init__(self, instance_id, expected=None, found=None):
        self.instance_id = instance_id
        msg = f"instance {instance_id!r}: sentence span does not match phrase"
        if expected is not None:
            msg += f" (phrase {expected!r}, span {found!r})"
        super().__init__(msg)


class UnknownMweType(DataError):
    def __init__(self, instance_id, raw):
        self.instance_id = instance_id
        self.raw = raw
        super().__init__(f"instance {instance_id!r}: unknown MWE type {raw!r}")


class MissingLabel(DataError):
    def __init__(self, instance_id):
        self.instance_id = instance_id
        super().__init__(f"instance {instance_id!r} has no MWE label")


class LayoutError(DataError):
    """Upstream release directory does not look like what the converter expects."""


class ZeroAnnotators(DataError):
    pass


class EmptyDataset(DataError):
    pass


class TooShort(DataError):
    pass


class ResourceError(DataError):
    pass


class DegenerateCategories(MweComplexityError):
    """Fleiss' kappa is undefined when only one category is ever used."""


class EmptyInput(MweComplexityError, ValueError):
    pass


class DimensionMismatch(MweComplexityError, ValueError):
    pass


class NonFiniteObjective(MweComplexityError, FloatingPointError):
    def __init__(self, point):
        self.point = point
        super().__init__("objective is not finite at the given point")


class LengthMismatch(MweComplexityError, ValueError):
    pass


class EmptySplit(DataError):
    pass


class TooFewInstances(DataError):
    pass
