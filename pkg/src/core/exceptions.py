"""
Exception hierarchy shared by all modules
"""

from typing import Any, List, Optional


class BanditError(Exception):
    """Base class for errors raised by this package"""


class InvalidArgumentError(BanditError, ValueError):
    """An operation was called outside its preconditions"""


class EvaluationError(BanditError):
    """
    The replay estimator cannot score an arm in a context group

    Attributes:
        group_key: Key of the context group being evaluated
        arm: Arm whose propensity is missing or zero
    """

    def __init__(self, message: str, group_key: Optional[str] = None, arm: Any = None):
        super().__init__(message)
        self.group_key = group_key
        self.arm = arm


class ConfigValidationError(BanditError):
    """
    Experiment configuration failed validation

    Attributes:
        errors: One human-readable entry per violated field
    """

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__(
            f"{len(self.errors)} configuration error(s):\n"
            + "\n".join(f"  - {e}" for e in self.errors)
        )
