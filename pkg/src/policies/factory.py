"""
Policy construction by algorithm tag
"""

from typing import Any, Mapping, Optional, Sequence, Union

from ..core.exceptions import InvalidArgumentError
from ..core.models import PositionWeights
from .base import Policy, PolicyTag
from .fixed import FixedScorePolicy
from .linucb import C2UCB, CMLinUCB, DCMLinUCB, UBMLinUCB
from .pbm_ucb import PBMUCB

CONTEXTUAL = {
    PolicyTag.UBM_LINUCB: UBMLinUCB,
    PolicyTag.C2UCB: C2UCB,
    PolicyTag.CM_LINUCB: CMLinUCB,
}


def parse_tag(tag: Union[str, PolicyTag]) -> PolicyTag:
    """Accept a tag in any letter case, with or without the superscript in C²UCB."""
    if isinstance(tag, PolicyTag):
        return tag
    normalized = str(tag).replace("²", "2").strip().lower()
    for candidate in PolicyTag:
        if candidate.value.lower() == normalized:
            return candidate
    raise InvalidArgumentError(
        f"unknown algorithm {tag!r}; expected one of {[t.value for t in PolicyTag]}"
    )


def make_policy(
    tag: Union[str, PolicyTag],
    d: int,
    K: int,
    weights: PositionWeights,
    horizon: int = 1,
    beta: Optional[float] = None,
    satisfaction: Optional[Sequence[float]] = None,
    arm_scores: Optional[Mapping[Any, float]] = None,
) -> Policy:
    """
    Build a fresh policy

    Args:
        tag: Algorithm name
        d: Context dimension (ignored by PBM-UCB and the fixed policy)
        K: List length
        weights: Position weights
        horizon: Planned number of rounds
        beta: Bound on the squared norm of theta*, defaults to d
        satisfaction: DCM stop probabilities, derived from weights when None
        arm_scores: Score table of the fixed policy

    Returns:
        Policy at round 0
    """
    kind = parse_tag(tag)
    if kind in CONTEXTUAL:
        return CONTEXTUAL[kind](d, K, weights, horizon=horizon, beta=beta)
    if kind is PolicyTag.DCM_LINUCB:
        return DCMLinUCB(d, K, weights, horizon=horizon, beta=beta, satisfaction=satisfaction)
    if kind is PolicyTag.PBM_UCB:
        return PBMUCB(K, weights)
    if arm_scores is None:
        raise InvalidArgumentError("the fixed policy needs an arm score table")
    return FixedScorePolicy(K, arm_scores)
