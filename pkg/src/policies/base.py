"""
Shared policy lifecycle: select a ranked list, then absorb its clicks
"""

from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, List, Optional, Sequence

import numpy as np

from ..core.exceptions import InvalidArgumentError
from ..core.models import CandidateSet, SelectionResult


class PolicyTag(str, Enum):
    """Algorithms known to the harness"""

    UBM_LINUCB = "UBM-LinUCB"
    C2UCB = "C2UCB"
    CM_LINUCB = "CM-LinUCB"
    DCM_LINUCB = "DCM-LinUCB"
    PBM_UCB = "PBM-UCB"
    FIXED = "fixed"


def last_click_positions(clicks: Sequence[int]) -> List[int]:
    """
    Position of the last click above each position

    Args:
        clicks: Click indicators, position 1 first

    Returns:
        k'(k) = max{j < k : clicks[j] = 1}, or 0 when nothing above was clicked
    """
    result = []
    last = 0
    for k, c in enumerate(clicks, start=1):
        result.append(last)
        if c:
            last = k
    return result


def _sort_key(arm: Any) -> Any:
    # mixed id types still order deterministically
    return (type(arm).__name__, arm)


def rank_by_scores(arm_ids: Sequence[Any], scores: np.ndarray, K: int) -> List[int]:
    """
    Indices of the K highest scores, descending; ties go to the smaller arm id
    """
    order = sorted(range(len(arm_ids)), key=lambda i: _sort_key(arm_ids[i]))
    # stable sort on -score keeps the id order among equal scores
    order.sort(key=lambda i: -scores[i])
    return order[:K]


class Policy(ABC):
    """
    Stateful arm-selection strategy

    ``select`` never mutates state; ``feedback`` absorbs one round of clicks
    and advances the round counter ``t`` by one.
    """

    tag: PolicyTag

    def __init__(self, K: int):
        if K < 1:
            raise InvalidArgumentError(f"K must be positive, got {K}")
        self.K = K
        self.t = 0

    @abstractmethod
    def scores(self, candidates: CandidateSet) -> np.ndarray:
        """Index value of every candidate for the upcoming round."""

    def select(self, candidates: CandidateSet, K: Optional[int] = None) -> SelectionResult:
        """
        Greedily pick the K candidates with the highest index

        Args:
            candidates: Arms offered this round
            K: List length, defaults to the policy's K

        Returns:
            SelectionResult ordered by descending index
        """
        K = self.K if K is None else K
        if candidates.m < K:
            raise InvalidArgumentError(f"{candidates.m} candidates cannot fill {K} positions")
        values = self.scores(candidates)
        chosen = rank_by_scores(candidates.arm_ids, values, K)
        return SelectionResult(
            arms=[candidates.arm_ids[i] for i in chosen],
            scores=[float(values[i]) for i in chosen],
            contexts=candidates.contexts[chosen],
        )

    def feedback(self, selection: SelectionResult, clicks: Sequence[int]) -> "Policy":
        """
        Absorb the clicks observed on a displayed selection

        Args:
            selection: The list that was shown
            clicks: Click indicator per position

        Returns:
            self, updated in place
        """
        if len(clicks) != selection.K:
            raise InvalidArgumentError(
                f"{len(clicks)} clicks for a selection of {selection.K} items"
            )
        self._absorb(selection, [int(c) for c in clicks])
        self.t += 1
        return self

    @abstractmethod
    def _absorb(self, selection: SelectionResult, clicks: List[int]) -> None:
        """Algorithm-specific state update."""
