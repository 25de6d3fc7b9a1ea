"""
Expectation-maximization fitting of the user browsing model

Each displayed item is an observation (position k, last click k', item a,
click c). For an unclicked item the posterior of having examined it is
w(1-g)/(1-wg) and of it being attractive g(1-w)/(1-wg); clicked items were
both examined and attractive. The M-step sets every w[k][k'] and gamma to
the mean posterior over its observations.
"""

from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from config.settings import settings
from ..core.exceptions import InvalidArgumentError
from ..core.models import PositionWeights
from ..policies.base import last_click_positions
from ..utils.logger import get_logger
from .models import AttractivenessTable, SessionRecord, UBMFit

logger = get_logger(__name__)

INITIAL_VALUE = 0.5


class UBMEstimator:
    """
    EM estimator for UBM examination weights and item attractiveness

    Attributes:
        K: Maximum list length
        max_iterations: Iteration cap
        tolerance: Stop once the mean log-likelihood improves by less than this
        clamp: Parameters are kept inside [clamp, 1 - clamp]
        per_user: Fit gamma per (user, item) instead of per item
    """

    def __init__(
        self,
        K: int,
        max_iterations: Optional[int] = None,
        tolerance: Optional[float] = None,
        clamp: Optional[float] = None,
        per_user: bool = False,
    ):
        if K < 1:
            raise InvalidArgumentError(f"K must be positive, got {K}")
        self.K = K
        self.max_iterations = max_iterations or settings.em_max_iterations
        self.tolerance = settings.em_tolerance if tolerance is None else tolerance
        self.clamp = settings.em_clamp if clamp is None else clamp
        self.per_user = per_user

    def _key(self, session: SessionRecord, item: str) -> Any:
        return (session.user_id, item) if self.per_user else item

    def _observations(self, sessions: Sequence[SessionRecord]) -> Dict[str, Any]:
        keys: Dict[Any, int] = {}
        pos: List[int] = []
        prev: List[int] = []
        item: List[int] = []
        click: List[int] = []
        for session in sessions:
            if session.K > self.K:
                raise InvalidArgumentError(
                    f"session of length {session.K} exceeds K={self.K}"
                )
            kprimes = last_click_positions(session.clicks)
            for k, (a, c) in enumerate(zip(session.displayed, session.clicks)):
                key = self._key(session, a)
                if key not in keys:
                    keys[key] = len(keys)
                pos.append(k)
                prev.append(kprimes[k])
                item.append(keys[key])
                click.append(c)
        return {
            "keys": list(keys),
            "pos": np.array(pos, dtype=np.int64),
            "prev": np.array(prev, dtype=np.int64),
            "item": np.array(item, dtype=np.int64),
            "click": np.array(click, dtype=bool),
        }

    def _log_likelihood(self, p: np.ndarray, click: np.ndarray) -> float:
        return float(np.mean(np.where(click, np.log(p), np.log1p(-p))))

    def fit(
        self,
        sessions: Sequence[SessionRecord],
        known_attractiveness: Optional[Mapping[Any, float]] = None,
    ) -> UBMFit:
        """
        Fit weights and attractiveness to a session log

        Args:
            sessions: Logged sessions of length <= K
            known_attractiveness: gamma values held fixed during fitting

        Returns:
            UBMFit with weights, attractiveness table and likelihood history
        """
        if not sessions:
            raise InvalidArgumentError("cannot fit click model parameters to an empty log")

        obs = self._observations(sessions)
        keys, pos, prev, item, click = obs["keys"], obs["pos"], obs["prev"], obs["item"], obs["click"]
        n_items = len(keys)
        slot = pos * self.K + prev
        n_slots = self.K * self.K
        lo, hi = self.clamp, 1.0 - self.clamp

        gamma = np.full(n_items, INITIAL_VALUE)
        fixed = np.zeros(n_items, dtype=bool)
        for key, value in (known_attractiveness or {}).items():
            if key in keys:
                idx = keys.index(key)
                gamma[idx] = np.clip(value, lo, hi)
                fixed[idx] = True
        exam = np.full(n_slots, INITIAL_VALUE)

        item_counts = np.bincount(item, minlength=n_items).astype(np.float64)
        slot_counts = np.bincount(slot, minlength=n_slots).astype(np.float64)
        observed = slot_counts > 0

        logger.info(
            f"Fitting UBM to {len(sessions)} sessions ({len(click)} observations, {n_items} items)"
        )

        history: List[float] = []
        converged = False
        iterations = 0
        for iterations in range(1, self.max_iterations + 1):
            w = exam[slot]
            g = gamma[item]
            p = w * g
            ll = self._log_likelihood(p, click)
            if history and ll - history[-1] < self.tolerance:
                history.append(ll)
                converged = True
                break
            history.append(ll)

            # E-step
            unclicked = 1.0 - p
            attr_post = np.where(click, 1.0, g * (1.0 - w) / unclicked)
            exam_post = np.where(click, 1.0, w * (1.0 - g) / unclicked)

            # M-step
            new_gamma = np.bincount(item, weights=attr_post, minlength=n_items) / item_counts
            gamma = np.where(fixed, gamma, np.clip(new_gamma, lo, hi))
            new_exam = np.bincount(slot, weights=exam_post, minlength=n_slots)
            exam = np.where(observed, np.clip(new_exam / np.maximum(slot_counts, 1.0), lo, hi), exam)
            logger.debug(f"EM iteration {iterations}: log-likelihood {ll:.10f}")

        if not converged:
            history.append(self._log_likelihood(exam[slot] * gamma[item], click))

        matrix = exam.reshape(self.K, self.K)
        weights = PositionWeights.from_matrix(np.tril(matrix))
        unobserved = [
            (k + 1, kp) for k in range(self.K) for kp in range(k + 1) if not observed[k * self.K + kp]
        ]
        if unobserved:
            logger.info(f"Slots without observations keep the initial weight: {unobserved}")
        weights.warn_if_not_monotone()

        table = AttractivenessTable(
            per_user=self.per_user,
            values={key: float(gamma[i]) for i, key in enumerate(keys)},
        )
        logger.info(
            f"UBM fit finished after {iterations} iterations "
            f"(converged={converged}, log-likelihood={history[-1]:.6f})"
        )
        return UBMFit(
            weights=weights,
            attractiveness=table,
            log_likelihood=history[-1],
            history=history,
            iterations=iterations,
            converged=converged,
        )


def em_fit_ubm(
    sessions: Sequence[SessionRecord],
    K: int,
    known_attractiveness: Optional[Mapping[Any, float]] = None,
    per_user: bool = False,
) -> UBMFit:
    """Fit UBM parameters with default settings; see ``UBMEstimator.fit``."""
    return UBMEstimator(K, per_user=per_user).fit(sessions, known_attractiveness)


def fit_dcm_satisfaction(sessions: Sequence[SessionRecord], K: int) -> np.ndarray:
    """
    Per-position DCM satisfaction from a log

    sat_k is the share of clicks at position k that are not followed by any
    later click; sat_K = 1. Positions never clicked keep 0.5.
    """
    if not sessions:
        raise InvalidArgumentError("cannot fit satisfaction to an empty log")
    clicked = np.zeros(K)
    final = np.zeros(K)
    for session in sessions:
        idx = [k for k, c in enumerate(session.clicks[:K]) if c == 1]
        for k in idx:
            clicked[k] += 1
        if idx:
            final[idx[-1]] += 1
    sat = np.where(clicked > 0, final / np.maximum(clicked, 1.0), INITIAL_VALUE)
    sat[K - 1] = 1.0
    return sat
