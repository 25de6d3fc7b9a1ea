"""
CTR metrics

CTR_sum is the mean total reward per round, CTR_set the share of rounds
with at least one click.
"""

from typing import Sequence, Tuple

import numpy as np

from ..core.exceptions import InvalidArgumentError


class CTRTracker:
    """Running CTR_sum / CTR_set over evaluated rounds"""

    def __init__(self):
        self.rounds = 0
        self.reward_total = 0.0
        self.set_total = 0

    def add(self, item_rewards: Sequence[float], set_click: int) -> None:
        """Record one round's per-item rewards and its set-level click."""
        self.rounds += 1
        self.reward_total += float(np.sum(item_rewards))
        self.set_total += int(set_click)

    @property
    def ctr_sum(self) -> float:
        return self.reward_total / self.rounds if self.rounds else 0.0

    @property
    def ctr_set(self) -> float:
        return self.set_total / self.rounds if self.rounds else 0.0


def ctr_metrics(clicks_trace: Sequence[Sequence[int]]) -> Tuple[float, float]:
    """
    CTR_sum and CTR_set of a binary click trace

    Args:
        clicks_trace: One click vector per round

    Returns:
        (mean clicks per round, share of rounds with a click)
    """
    if len(clicks_trace) == 0:
        raise InvalidArgumentError("click trace is empty")
    tracker = CTRTracker()
    for clicks in clicks_trace:
        tracker.add(clicks, int(any(clicks)))
    return tracker.ctr_sum, tracker.ctr_set
