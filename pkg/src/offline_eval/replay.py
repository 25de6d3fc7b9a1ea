"""
Sequential UBM-IPS replay of a policy on a grouped log

Each round draws a context group uniformly with replacement, lets the
policy rank the group's candidates, and walks the list from the top:
every item gets the unbiased simulated reward for its (k, k') slot, and a
Bernoulli draw on that reward decides whether it counts as the last click
for the positions below. The drawn clicks are what the policy learns from
and what decides the set-level click F.
"""

from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..core.exceptions import EvaluationError, InvalidArgumentError
from ..core.models import CandidateSet, PositionWeights
from ..policies.base import Policy
from ..utils.logger import get_logger
from ..utils.rng import SeedLike, as_generator
from .estimator import build_propensities, sample_last_click, simulate_item_reward
from .metrics import CTRTracker
from .models import PropensityTable, ReplayDataset, ReplayGroup

logger = get_logger(__name__)

ContextFn = Callable[[ReplayGroup, str], np.ndarray]

TRACE_COLUMNS = [
    "round",
    "group_key",
    "selected_ids",
    "kprime_vector",
    "item_rewards",
    "F",
    "cum_ctr_sum",
    "cum_ctr_set",
]


def one_hot_contexts(dataset: ReplayDataset) -> ContextFn:
    """Context function that encodes each arm as a unit vector over the dataset's items."""
    index = {arm: i for i, arm in enumerate(dataset.items)}
    d = len(index)

    def context(group: ReplayGroup, arm: str) -> np.ndarray:
        x = np.zeros(d)
        x[index[arm]] = 1.0
        return x

    return context


def logged_contexts(group: ReplayGroup, arm: str) -> np.ndarray:
    x = group.logged_context(arm)
    if x is None:
        raise InvalidArgumentError(f"no logged context for arm {arm} in group {group.key}")
    return x


class ReplayResult(BaseModel):
    """Outcome of one replay run"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    ctr_sum: float = Field(..., description="Mean unbiased total reward per evaluated round")
    ctr_set: float = Field(..., description="Share of evaluated rounds with a sampled click")
    rounds: int = Field(..., description="Rounds requested")
    skipped: int = Field(default=0, description="Rounds dropped on a propensity miss")
    trace: pd.DataFrame = Field(..., description="One row per round")

    def to_csv(self, path: Union[str, Path]) -> Path:
        """Write the per-round trace."""
        path = Path(path)
        self.trace.to_csv(path, index=False, float_format="%.17g")
        logger.info(f"Wrote replay trace with {len(self.trace)} rows to {path}")
        return path


def _join(values: List) -> str:
    return ";".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in values)


def replay_evaluate(
    policy: Policy,
    dataset: ReplayDataset,
    weights: PositionWeights,
    K: Optional[int] = None,
    seed: SeedLike = 0,
    rounds: Optional[int] = None,
    propensities: Optional[PropensityTable] = None,
    context_fn: Optional[ContextFn] = None,
) -> ReplayResult:
    """
    Estimate a policy's CTRs offline

    Args:
        policy: Policy to evaluate; it learns from the sampled clicks
        dataset: Grouped log
        weights: Position weights
        K: List length, defaults to the dataset's K
        seed: Seed or generator for group draws and click sampling
        rounds: Number of rounds, defaults to the number of logged records
        propensities: Precomputed propensities for ``dataset``
        context_fn: Maps (group, arm) to a context; logged contexts when the
            records carry them, one-hot item encoding otherwise

    Returns:
        ReplayResult; skipped rounds are excluded from both CTR denominators
    """
    K = dataset.K if K is None else K
    if K > dataset.K:
        raise InvalidArgumentError(f"K={K} exceeds the logged list length {dataset.K}")
    short = [g.key for g in dataset.groups.values() if len(g.candidates) < K]
    if short:
        raise InvalidArgumentError(f"{len(short)} groups have fewer than {K} candidates, e.g. {short[0]}")
    T = dataset.n_records if rounds is None else rounds
    if T < 1:
        raise InvalidArgumentError(f"rounds must be >= 1, got {T}")

    rng = as_generator(seed)
    table = propensities or build_propensities(dataset, weights)
    if context_fn is None:
        has_contexts = all(r.contexts is not None for g in dataset.groups.values() for r in g.records)
        context_fn = logged_contexts if has_contexts else one_hot_contexts(dataset)
    groups = list(dataset.groups.values())
    candidate_sets = {
        g.key: CandidateSet(
            arm_ids=list(g.candidates),
            contexts=np.vstack([context_fn(g, arm) for arm in g.candidates]),
        )
        for g in groups
    }

    tracker = CTRTracker()
    skipped = 0
    rows = []
    for t in range(1, T + 1):
        group = groups[int(rng.integers(len(groups)))]
        selection = policy.select(candidate_sets[group.key], K)
        kprime = 0
        kprimes: List[int] = []
        rewards: List[float] = []
        clicks: List[int] = []
        try:
            for k, arm in enumerate(selection.arms, start=1):
                kprimes.append(kprime)
                reward = simulate_item_reward(arm, (k, kprime), group, weights, table)
                click = sample_last_click(reward, rng)
                rewards.append(reward)
                clicks.append(click)
                if click:
                    kprime = k
        except EvaluationError as e:
            skipped += 1
            logger.warning(f"Round {t} skipped: {e}")
            rows.append([t, group.key, _join(selection.arms), _join(kprimes), "", None,
                         tracker.ctr_sum, tracker.ctr_set])
            continue

        set_click = int(any(clicks))
        tracker.add(rewards, set_click)
        policy.feedback(selection, clicks)
        rows.append([t, group.key, _join(selection.arms), _join(kprimes), _join(rewards),
                     set_click, tracker.ctr_sum, tracker.ctr_set])

    if skipped:
        logger.warning(f"Skipped {skipped} of {T} replay rounds on propensity misses")
    logger.info(
        f"Replay of {policy.tag.value}: CTR_sum={tracker.ctr_sum:.4f} "
        f"CTR_set={tracker.ctr_set:.4f} over {tracker.rounds} rounds"
    )
    return ReplayResult(
        ctr_sum=tracker.ctr_sum,
        ctr_set=tracker.ctr_set,
        rounds=T,
        skipped=skipped,
        trace=pd.DataFrame(rows, columns=TRACE_COLUMNS),
    )
