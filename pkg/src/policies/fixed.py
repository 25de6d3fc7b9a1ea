"""
Fixed-score policy used as a replay target and as the oracle player
"""

from typing import Any, List, Mapping

import numpy as np

from ..core.exceptions import InvalidArgumentError
from ..core.models import CandidateSet, SelectionResult
from .base import Policy, PolicyTag


class FixedScorePolicy(Policy):
    """Ranks candidates by a constant per-arm score and learns nothing"""

    tag = PolicyTag.FIXED

    def __init__(self, K: int, arm_scores: Mapping[Any, float]):
        super().__init__(K)
        self.arm_scores = dict(arm_scores)

    def scores(self, candidates: CandidateSet) -> np.ndarray:
        missing = [a for a in candidates.arm_ids if a not in self.arm_scores]
        if missing:
            raise InvalidArgumentError(f"no score for arms {missing}")
        return np.array([self.arm_scores[a] for a in candidates.arm_ids], dtype=np.float64)

    def _absorb(self, selection: SelectionResult, clicks: List[int]) -> None:
        return None
