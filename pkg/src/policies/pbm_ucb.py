"""
PBM-UCB: context-free UCB with position-based examination correction
"""

from typing import Any, Dict, List

import numpy as np

from ..core.exceptions import InvalidArgumentError
from ..core.models import CandidateSet, PositionWeights, SelectionResult
from .base import Policy, PolicyTag


class PBMUCB(Policy):
    """
    Per-arm UCB where exposures count by their examination probability

    Each display of arm a at position k adds w[k][0] to the exposure count
    N_a and the click to S_a. The index is S_a / N_a + sqrt(1.5 ln t / N_a);
    arms without exposure score +inf so they are tried first.

    Attributes:
        weights: Position weights; only w[k][0] is used
        clicks: Click totals S_a
        exposure: Weighted exposure counts N_a
    """

    tag = PolicyTag.PBM_UCB

    def __init__(self, K: int, weights: PositionWeights):
        super().__init__(K)
        if weights.K < K:
            raise InvalidArgumentError(f"weights cover {weights.K} positions, need {K}")
        self.weights = weights
        self.clicks: Dict[Any, float] = {}
        self.exposure: Dict[Any, float] = {}

    def scores(self, candidates: CandidateSet) -> np.ndarray:
        log_t = np.log(max(self.t + 1, 1))
        values = np.empty(candidates.m)
        for i, arm in enumerate(candidates.arm_ids):
            n = self.exposure.get(arm, 0.0)
            if n <= 0.0:
                values[i] = np.inf
            else:
                mean = self.clicks.get(arm, 0.0) / n
                values[i] = mean + np.sqrt(1.5 * log_t / n)
        return values

    def _absorb(self, selection: SelectionResult, clicks: List[int]) -> None:
        first = self.weights.first_examination
        for k, (arm, c) in enumerate(zip(selection.arms, clicks)):
            self.exposure[arm] = self.exposure.get(arm, 0.0) + float(first[k])
            self.clicks[arm] = self.clicks.get(arm, 0.0) + float(c)
