"""
Contextual combinatorial LinUCB policies

All four share one weighted ridge model and the same greedy top-K
selection; they differ in which displayed positions become training
samples and with what weight:

- UBM-LinUCB: every position, weighted by w[k][k'] with k' the last click above k
- C2UCB: every position, weight 1
- CM-LinUCB: positions down to the first click (all when nothing was clicked), weight 1
- DCM-LinUCB: positions down to the last click (all when nothing was clicked),
  weighted by the DCM probability that the user is still browsing at k,
  prod over clicked j < k of (1 - sat_j). This weighting is our reading of
  the DCM variant; the satisfaction vector is either fitted from a log or
  derived from the position weights.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..click_models.simulator import satisfaction_from_weights
from ..core.alpha import alpha_schedule
from ..core.exceptions import InvalidArgumentError
from ..core.models import AlphaParams, CandidateSet, PositionWeights, SelectionResult
from ..core.ridge import RidgeState
from .base import Policy, PolicyTag, last_click_positions

Sample = Tuple[float, np.ndarray, float]


class ContextualPolicy(Policy):
    """
    LinUCB over a shared linear attractiveness model

    Attributes:
        d: Context dimension
        weights: Position weights
        params: Exploration schedule constants
        ridge: Online ridge regression state
    """

    def __init__(
        self,
        d: int,
        K: int,
        weights: PositionWeights,
        horizon: int = 1,
        beta: Optional[float] = None,
        params: Optional[AlphaParams] = None,
    ):
        super().__init__(K)
        if weights.K < K:
            raise InvalidArgumentError(f"weights cover {weights.K} positions, need {K}")
        self.d = d
        self.weights = weights
        self.params = params or AlphaParams.for_phi(d, self._phi(), K, horizon, beta)
        self.ridge = RidgeState(d, self.params.lam)

    def _phi(self) -> float:
        # all-ones sample weights
        return float(self.K)

    @property
    def alpha(self) -> float:
        """Exploration coefficient of the upcoming round."""
        return alpha_schedule(self.params, self.t + 1)

    def scores(self, candidates: CandidateSet) -> np.ndarray:
        if candidates.d != self.d:
            raise InvalidArgumentError(f"contexts have d={candidates.d}, policy expects {self.d}")
        return self.ridge.ucb_batch(candidates.contexts, self.alpha)

    def _absorb(self, selection: SelectionResult, clicks: List[int]) -> None:
        if selection.contexts is None:
            raise InvalidArgumentError("selection carries no contexts")
        self.ridge.update(self.samples(selection.contexts, clicks))

    def samples(self, contexts: np.ndarray, clicks: Sequence[int]) -> List[Sample]:
        """Training samples (weight, context, reward) produced by one round."""
        raise NotImplementedError


class UBMLinUCB(ContextualPolicy):
    """LinUCB with examination weights w[k][k'] from the user browsing model"""

    tag = PolicyTag.UBM_LINUCB

    def _phi(self) -> float:
        m = self.weights.matrix
        return float(sum(m[k, k] ** 2 for k in range(self.K)))

    def samples(self, contexts: np.ndarray, clicks: Sequence[int]) -> List[Sample]:
        m = self.weights.matrix
        kprimes = last_click_positions(clicks)
        return [
            (float(m[k, kprimes[k]]), contexts[k], float(clicks[k]))
            for k in range(len(clicks))
        ]


class C2UCB(ContextualPolicy):
    """Combinatorial LinUCB that treats every displayed item as examined"""

    tag = PolicyTag.C2UCB

    def samples(self, contexts: np.ndarray, clicks: Sequence[int]) -> List[Sample]:
        return [(1.0, contexts[k], float(clicks[k])) for k in range(len(clicks))]


class CMLinUCB(ContextualPolicy):
    """Cascade-model LinUCB: items behind the first click are ignored"""

    tag = PolicyTag.CM_LINUCB

    def samples(self, contexts: np.ndarray, clicks: Sequence[int]) -> List[Sample]:
        stop = next((k + 1 for k, c in enumerate(clicks) if c), len(clicks))
        return [(1.0, contexts[k], float(clicks[k])) for k in range(stop)]


class DCMLinUCB(ContextualPolicy):
    """Dependent-click-model LinUCB with per-position satisfaction"""

    tag = PolicyTag.DCM_LINUCB

    def __init__(
        self,
        d: int,
        K: int,
        weights: PositionWeights,
        horizon: int = 1,
        beta: Optional[float] = None,
        params: Optional[AlphaParams] = None,
        satisfaction: Optional[Sequence[float]] = None,
    ):
        super().__init__(d, K, weights, horizon, beta, params)
        sat = satisfaction_from_weights(weights) if satisfaction is None else satisfaction
        self.satisfaction = np.asarray(sat, dtype=np.float64)
        if len(self.satisfaction) < K:
            raise InvalidArgumentError(f"{len(self.satisfaction)} satisfaction values for K={K}")

    def samples(self, contexts: np.ndarray, clicks: Sequence[int]) -> List[Sample]:
        clicked = [k for k, c in enumerate(clicks) if c]
        stop = clicked[-1] + 1 if clicked else len(clicks)
        result = []
        browsing = 1.0
        for k in range(stop):
            result.append((browsing, contexts[k], float(clicks[k])))
            if clicks[k]:
                browsing *= 1.0 - self.satisfaction[k]
        return result
