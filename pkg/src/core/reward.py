"""
Set-level reward of a displayed list
"""

from typing import Sequence

import numpy as np

from .exceptions import InvalidArgumentError
from .models import PositionWeights


def set_reward(clicks: Sequence[int]) -> int:
    """1 if at least one item in the list was clicked, else 0."""
    return int(any(int(c) == 1 for c in clicks))


def expected_set_reward(attractiveness: Sequence[float], weights: PositionWeights) -> float:
    """
    Probability that a list receives at least one click

    Before the first click every position is examined with w[k][0], so the
    list goes unclicked with probability prod(1 - gamma_k * w[k][0]).

    Args:
        attractiveness: gamma of the item at positions 1..len
        weights: Position weights with K >= len(attractiveness)

    Returns:
        1 - prod_k (1 - gamma_k * w[k][0])
    """
    gammas = np.asarray(attractiveness, dtype=np.float64)
    if gammas.ndim != 1 or len(gammas) > weights.K:
        raise InvalidArgumentError(
            f"{len(gammas)} attractiveness values for K={weights.K} positions"
        )
    probs = gammas * weights.first_examination[: len(gammas)]
    if np.any(probs < 0.0) or np.any(probs > 1.0) or np.any(np.isnan(probs)):
        raise InvalidArgumentError(f"click probabilities {probs.tolist()} outside [0, 1]")
    return float(1.0 - np.prod(1.0 - probs))
