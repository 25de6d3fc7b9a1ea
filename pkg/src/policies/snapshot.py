"""
Policy snapshots

Two formats share one layout. ``.json`` stores everything as JSON numbers
(Python's float repr round-trips exactly); ``.npz`` stores the ridge
matrices as raw float64 arrays next to a JSON metadata string.
"""

import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ..core.exceptions import InvalidArgumentError
from ..core.models import AlphaParams, PositionWeights
from ..utils.logger import get_logger
from .base import Policy, PolicyTag
from .factory import make_policy, parse_tag
from .fixed import FixedScorePolicy
from .linucb import ContextualPolicy, DCMLinUCB
from .pbm_ucb import PBMUCB

logger = get_logger(__name__)

SNAPSHOT_VERSION = 1
RIDGE_ARRAYS = ("A", "A_inv", "b", "theta")


def _pairs(table: Dict[Any, float]) -> list:
    return [[arm, value] for arm, value in table.items()]


def _unpairs(pairs: list) -> Dict[Any, float]:
    return {(tuple(arm) if isinstance(arm, list) else arm): float(v) for arm, v in pairs}


def snapshot_state(policy: Policy) -> Dict[str, Any]:
    """
    Capture a policy as plain data

    Args:
        policy: Any policy built by ``make_policy``

    Returns:
        Dict with version, tag, K, t and the algorithm-specific state;
        ridge matrices are numpy arrays
    """
    state: Dict[str, Any] = {
        "version": SNAPSHOT_VERSION,
        "tag": policy.tag.value,
        "K": policy.K,
        "t": policy.t,
    }
    if isinstance(policy, ContextualPolicy):
        ridge = policy.ridge
        state.update(
            d=policy.d,
            params=policy.params.model_dump(),
            weights=policy.weights.model_dump(),
            update_count=ridge.update_count,
            refactor_every=ridge.refactor_every,
        )
        for name in RIDGE_ARRAYS:
            state[name] = getattr(ridge, name).copy()
        if isinstance(policy, DCMLinUCB):
            state["satisfaction"] = policy.satisfaction.tolist()
    elif isinstance(policy, PBMUCB):
        state.update(
            weights=policy.weights.model_dump(),
            clicks=_pairs(policy.clicks),
            exposure=_pairs(policy.exposure),
        )
    elif isinstance(policy, FixedScorePolicy):
        state["arm_scores"] = _pairs(policy.arm_scores)
    else:
        raise InvalidArgumentError(f"cannot snapshot policy of type {type(policy).__name__}")
    return state


def restore_state(state: Dict[str, Any]) -> Policy:
    """Rebuild a live policy from ``snapshot_state`` output."""
    version = state.get("version")
    if version != SNAPSHOT_VERSION:
        raise InvalidArgumentError(f"unsupported snapshot version {version!r}")
    tag = parse_tag(state["tag"])
    K = int(state["K"])

    if tag is PolicyTag.FIXED:
        policy: Policy = FixedScorePolicy(K, _unpairs(state["arm_scores"]))
    elif tag is PolicyTag.PBM_UCB:
        policy = PBMUCB(K, PositionWeights.model_validate(state["weights"]))
        policy.clicks = _unpairs(state["clicks"])
        policy.exposure = _unpairs(state["exposure"])
    else:
        params = AlphaParams.model_validate(state["params"])
        policy = make_policy(
            tag,
            int(state["d"]),
            K,
            PositionWeights.model_validate(state["weights"]),
            satisfaction=state.get("satisfaction"),
        )
        assert isinstance(policy, ContextualPolicy)
        policy.params = params
        ridge = policy.ridge
        ridge.lam = params.lam
        ridge.refactor_every = int(state["refactor_every"])
        ridge.update_count = int(state["update_count"])
        for name in RIDGE_ARRAYS:
            setattr(ridge, name, np.array(state[name], dtype=np.float64))
    policy.t = int(state["t"])
    return policy


def save_snapshot(policy: Policy, path: Union[str, Path]) -> Path:
    """
    Write a policy snapshot; the suffix picks the format

    Args:
        policy: Policy to persist
        path: ``.json`` or ``.npz`` file

    Returns:
        The written path
    """
    path = Path(path)
    state = snapshot_state(policy)
    if path.suffix == ".json":
        doc = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in state.items()}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f)
    elif path.suffix == ".npz":
        arrays = {name: state.pop(name) for name in RIDGE_ARRAYS if name in state}
        np.savez(path, meta=np.array(json.dumps(state)), **arrays)
    else:
        raise InvalidArgumentError(f"snapshot path must end in .json or .npz, got {path}")
    logger.info(f"Saved {policy.tag.value} snapshot at t={policy.t} to {path}")
    return path


def load_snapshot(path: Union[str, Path]) -> Policy:
    """Read a snapshot written by ``save_snapshot`` and restore the policy."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as f:
            state = json.load(f)
    elif path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as data:
            state = json.loads(str(data["meta"]))
            for name in RIDGE_ARRAYS:
                if name in data.files:
                    state[name] = data[name].copy()
    else:
        raise InvalidArgumentError(f"snapshot path must end in .json or .npz, got {path}")
    return restore_state(state)
