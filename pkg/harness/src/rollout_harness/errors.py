"""Error types for the rollout harness.

Mirrors the engine-side convention: one class per error condition, class name
doubling as the machine-readable error code (``HarnessError.code``).
"""


class HarnessError(Exception):
    """Base class for all harness errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidConfig(HarnessError):
    pass


class NoThinkSpan(HarnessError):
    pass


class AnchorOrderViolation(HarnessError):
    pass


class GenerationFailure(HarnessError):
    pass


class NoBoxedAnswer(HarnessError):
    pass
