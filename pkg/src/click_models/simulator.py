"""
Generative click simulators for UBM, PBM, Cascade and DCM users

Every simulator is a pure function of (model, gammas, weights, seed). The
vectorized ``simulate_sessions`` draws many sessions at once;
``simulate_session`` is its single-session case.
"""

from typing import Optional, Sequence, Union

import numpy as np

from ..core.exceptions import InvalidArgumentError
from ..core.models import PositionWeights
from ..utils.rng import SeedLike, as_generator
from .models import ClickModelType


def _as_model(model: Union[str, ClickModelType]) -> ClickModelType:
    try:
        return ClickModelType(model)
    except ValueError:
        raise InvalidArgumentError(f"unknown click model {model!r}") from None


def _check_inputs(
    gammas: Sequence[float], weights: PositionWeights
) -> np.ndarray:
    g = np.asarray(gammas, dtype=np.float64)
    if g.ndim != 1 or len(g) == 0 or len(g) > weights.K:
        raise InvalidArgumentError(f"{len(g)} attractiveness values for K={weights.K}")
    if np.any(g < 0.0) or np.any(g > 1.0):
        raise InvalidArgumentError(f"attractiveness must lie in [0, 1], got {g.tolist()}")
    return g


def _check_satisfaction(satisfaction: Optional[Sequence[float]], K: int) -> np.ndarray:
    if satisfaction is None:
        raise InvalidArgumentError("the DCM simulator needs per-position satisfaction values")
    sat = np.asarray(satisfaction, dtype=np.float64)
    if len(sat) < K or np.any(sat < 0.0) or np.any(sat > 1.0):
        raise InvalidArgumentError(f"invalid satisfaction vector {sat.tolist()} for K={K}")
    return sat[:K]


def ubm_click_prob(gamma: float, k: int, k_prime: int, weights: PositionWeights) -> float:
    """
    Click probability of an item under UBM

    Args:
        gamma: Attractiveness of the item
        k: Display position (1-based)
        k_prime: Position of the last click above k, 0 if none
        weights: Examination probabilities

    Returns:
        w[k][k'] * gamma
    """
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgumentError(f"attractiveness {gamma} outside [0, 1]")
    return weights.w(k, k_prime) * gamma


def satisfaction_from_weights(weights: PositionWeights) -> np.ndarray:
    """
    DCM satisfaction implied by UBM weights

    After a click at k a UBM user examines k+1 with w[k+1][k], so the
    matching DCM stop probability is 1 - w[k+1][k]; sat_K is 1.
    """
    m = weights.matrix
    sat = np.ones(weights.K)
    for k in range(weights.K - 1):
        sat[k] = 1.0 - m[k + 1, k + 1]
    return sat


def simulate_sessions(
    model: Union[str, ClickModelType],
    gammas: Sequence[float],
    weights: PositionWeights,
    n: int,
    rng: SeedLike = None,
    satisfaction: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Draw n independent sessions for one displayed list

    Args:
        model: Click model tag
        gammas: Attractiveness of the displayed items, position 1 first
        weights: Position weights (UBM, PBM)
        n: Number of sessions
        rng: Seed or generator
        satisfaction: Per-position stop-after-click probabilities (DCM)

    Returns:
        n x len(gammas) int8 click matrix
    """
    kind = _as_model(model)
    g = _check_inputs(gammas, weights)
    K = len(g)
    gen = as_generator(rng)
    m = weights.matrix
    u = gen.random((n, K))
    clicks = np.zeros((n, K), dtype=np.int8)

    if kind is ClickModelType.UBM:
        last = np.zeros(n, dtype=np.int64)
        for k in range(K):
            p = m[k, last] * g[k]
            hit = u[:, k] < p
            clicks[hit, k] = 1
            last[hit] = k + 1
    elif kind is ClickModelType.PBM:
        clicks[:] = u < (m[:K, 0] * g)[None, :]
    elif kind is ClickModelType.CM:
        browsing = np.ones(n, dtype=bool)
        for k in range(K):
            hit = browsing & (u[:, k] < g[k])
            clicks[hit, k] = 1
            browsing &= ~hit
    else:
        sat = _check_satisfaction(satisfaction, K)
        v = gen.random((n, K))
        browsing = np.ones(n, dtype=bool)
        for k in range(K):
            hit = browsing & (u[:, k] < g[k])
            clicks[hit, k] = 1
            browsing &= ~(hit & (v[:, k] < sat[k]))
    return clicks


def simulate_session(
    model: Union[str, ClickModelType],
    gammas: Sequence[float],
    weights: PositionWeights,
    rng: SeedLike = None,
    satisfaction: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Draw one session; see ``simulate_sessions``."""
    return simulate_sessions(model, gammas, weights, 1, rng, satisfaction)[0]


def marginal_click_probs(
    model: Union[str, ClickModelType],
    gammas: Sequence[float],
    weights: PositionWeights,
    satisfaction: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Exact probability of a click at each position

    UBM is solved by dynamic programming over the position of the last
    click; the other models have closed forms.
    """
    kind = _as_model(model)
    g = _check_inputs(gammas, weights)
    K = len(g)
    m = weights.matrix
    probs = np.zeros(K)

    if kind is ClickModelType.UBM:
        # last[j] = P(last click above the current position is at j)
        last = np.zeros(K + 1)
        last[0] = 1.0
        for k in range(K):
            p_click = m[k, : k + 1] * g[k]
            probs[k] = float(last[: k + 1] @ p_click)
            moved = last[: k + 1] * p_click
            last[: k + 1] -= moved
            last[k + 1] = moved.sum()
    elif kind is ClickModelType.PBM:
        probs = m[:K, 0] * g
    elif kind is ClickModelType.CM:
        examine = 1.0
        for k in range(K):
            probs[k] = examine * g[k]
            examine *= 1.0 - g[k]
    else:
        sat = _check_satisfaction(satisfaction, K)
        examine = 1.0
        for k in range(K):
            probs[k] = examine * g[k]
            examine *= (1.0 - g[k]) + g[k] * (1.0 - sat[k])
    return probs
