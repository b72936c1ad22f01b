"""Error types shared across the package.

Every error condition has its own class; the class name doubles as the
machine-readable error code emitted by the CLI (``RirsError.code``).
"""


class RirsError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- pool / rollout file ingestion ---

class MalformedManifest(RirsError):
    pass


class SizeMismatch(RirsError):
    pass


class NonFiniteValue(RirsError):
    pass


class ShapeMismatch(RirsError):
    pass


class EmptyPool(RirsError):
    pass


class MalformedRecord(RirsError):
    pass


class PositiveLogprob(RirsError):
    pass


# --- feature computation ---

class EmptyMatrix(RirsError):
    pass


class DimMismatch(RirsError):
    pass


class NegativeUtility(RirsError):
    pass


class ZeroFeature(RirsError):
    pass


# --- selection ---

class BudgetExceedsPool(RirsError):
    pass


# --- baseline scoring ---

class EmptyRollouts(RirsError):
    pass


class TooFewRollouts(RirsError):
    pass


class ZeroEmbedding(RirsError):
    pass


class EmptyTokens(RirsError):
    pass


class UnknownScore(RirsError):
    pass


# --- analysis ---

class DegenerateSeries(RirsError):
    pass


class JoinMismatch(RirsError):
    pass


class IoError(RirsError):
    pass


# --- reward / objective kernels ---

class NonPositiveRatio(RirsError):
    pass


class NegativeKlTerm(RirsError):
    pass


class EmptyAnswer(RirsError):
    pass


# --- cli ---

class InvalidParams(RirsError):
    pass


class OutputConflict(RirsError):
    pass
