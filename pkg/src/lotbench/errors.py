"""Exception hierarchy shared by all lotbench modules."""


class LotbenchError(Exception):
    """Base class for all lotbench errors."""


# --- instance validation ---

class GridTooSmall(LotbenchError):
    pass


class NonPositiveTypeMass(LotbenchError):
    pass


class PmfNotNormalized(LotbenchError):
    pass


class NegativeCapacity(LotbenchError):
    pass


class BadMass(LotbenchError):
    pass


class IndexOutOfRange(LotbenchError):
    pass


# --- mechanisms and transforms ---

class DimensionMismatch(LotbenchError):
    pass


class LotteryOverflow(LotbenchError):
    pass


class InfeasibleInput(LotbenchError):
    pass


class InsufficientMass(LotbenchError):
    pass


class BadIndices(LotbenchError):
    pass


# --- LP layer ---

class UnsupportedObjective(LotbenchError):
    pass


class NotOptimal(LotbenchError):
    pass


# --- converse ---

class PreconditionViolation(LotbenchError):
    """Raised with a message naming the specific failed inequality."""


# --- CRP ---

class CapsInfeasible(LotbenchError):
    pass


class BadQuota(LotbenchError):
    pass


# --- optimizer / KKT ---

class InfeasibleMasses(LotbenchError):
    pass


# --- ordinal extension ---

class UnknownGamma(LotbenchError):
    pass


class ConvexityHypothesisFailed(LotbenchError):
    """Carries the list of utility types whose grid view fails convexity."""

    def __init__(self, failing):
        self.failing = list(failing)
        super().__init__(f"convexity fails for utility types: {self.failing}")
