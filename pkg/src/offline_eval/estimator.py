"""
UBM-IPS building blocks: empirical propensities, per-item reward
simulation and the Bernoulli click draw used to propagate k'
"""

from typing import Tuple

import numpy as np

from ..core.exceptions import EvaluationError, InvalidArgumentError
from ..core.models import PositionWeights, slot_count, slot_index
from ..policies.base import last_click_positions
from ..utils.logger import get_logger
from ..utils.rng import SeedLike, as_generator
from .models import PropensityTable, ReplayDataset, ReplayGroup

logger = get_logger(__name__)


def build_propensities(dataset: ReplayDataset, weights: PositionWeights) -> PropensityTable:
    """
    Estimate pi(a, k, k' | X) from the log

    Args:
        dataset: Grouped replay log
        weights: Position weights; must cover the dataset's K

    Returns:
        Share of records in group X that show a at position k with the
        realized last click k', for every arm logged in X
    """
    K = dataset.K
    if weights.K < K:
        raise InvalidArgumentError(f"weights cover {weights.K} positions, dataset needs {K}")
    n_slots = slot_count(K)
    vectors = {}
    for key, group in dataset.groups.items():
        for record in group.records:
            kprimes = last_click_positions(record.clicks)
            for k, (arm, kp) in enumerate(zip(record.displayed, kprimes), start=1):
                vec = vectors.setdefault((key, arm), np.zeros(n_slots))
                vec[slot_index(k, kp)] += 1.0
        for arm in group.candidates:
            vectors[(key, arm)] /= group.size
    logger.info(f"Built propensities for {len(vectors)} (group, arm) pairs")
    return PropensityTable(K=K, vectors=vectors)


def simulate_item_reward(
    arm: str,
    phi_slot: Tuple[int, int],
    group: ReplayGroup,
    weights: PositionWeights,
    propensities: PropensityTable,
) -> float:
    """
    Unbiased reward of placing ``arm`` at ``phi_slot`` in context X

    (1/|D(.|X)|) * sum over the group's records containing the arm of the
    logged click, times <W~, Phi> / <W~, pi>. Phi is deterministic, so
    <W~, Phi> = w[k][k'] of ``phi_slot``. The result may exceed 1.

    Args:
        arm: Arm to score
        phi_slot: (k, k') chosen by the target policy
        group: Records of context X
        weights: Position weights
        propensities: Output of ``build_propensities``

    Returns:
        Non-negative real reward

    Raises:
        EvaluationError: The arm has zero logged examination mass in X
    """
    k, k_prime = phi_slot
    denominator = propensities.examination(group.key, arm, weights.tilde_w[: slot_count(propensities.K)])
    if denominator <= 0.0:
        raise EvaluationError(
            f"arm {arm} has no examined logging mass in group {group.key}",
            group_key=group.key,
            arm=arm,
        )
    clicks = group.click_count(arm)
    if clicks == 0:
        return 0.0
    return (clicks / group.size) * weights.w(k, k_prime) / denominator


def sample_last_click(reward: float, rng: SeedLike = None) -> int:
    """
    Turn a simulated reward into a click for k' propagation

    Args:
        reward: Non-negative simulated reward
        rng: Seed or generator

    Returns:
        1 when reward >= 1, otherwise a Bernoulli(reward) draw
    """
    if reward < 0:
        raise InvalidArgumentError(f"reward must be non-negative, got {reward}")
    if reward >= 1.0:
        return 1
    if reward == 0.0:
        return 0
    return int(as_generator(rng).random() < reward)
