"""
Synthetic ground-truth worlds for regret experiments
"""

import json
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..click_models.models import ClickModelType
from ..click_models.simulator import satisfaction_from_weights, simulate_session
from ..core.exceptions import InvalidArgumentError
from ..core.models import CandidateSet, PositionWeights, SelectionResult
from ..policies.base import Policy, rank_by_scores
from ..utils.logger import get_logger
from ..utils.rng import SeedLike, as_generator

logger = get_logger(__name__)

GAMMA_FLOOR = 0.05
GAMMA_CEILING = 0.95
THETA_RADIUS_SHARE = 0.9


class RoundOutcome(BaseModel):
    """What one simulated round produced"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    selection: SelectionResult
    clicks: List[int]
    regret: float = Field(..., description="sum_k w[k][0] * (gamma*_k - gamma_k)")


class GroundTruthWorld(BaseModel):
    """
    Hidden linear attractiveness model with a fixed arm pool

    Attributes:
        theta: theta*, with squared norm at most beta
        contexts: m x d arm contexts; arm ids are 0..m-1
        weights: True position weights
        beta: Norm bound on theta*
        horizon: Planned number of rounds
        seed: Seed the world was generated from
        click_model: User model clicks are drawn from
        satisfaction: DCM stop probabilities, derived from weights when unset
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    theta: np.ndarray
    contexts: np.ndarray
    weights: PositionWeights
    beta: float = Field(..., gt=0)
    horizon: int = Field(default=1, ge=1)
    seed: Optional[int] = None
    click_model: ClickModelType = ClickModelType.UBM
    satisfaction: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_assumptions(self) -> "GroundTruthWorld":
        if self.contexts.ndim != 2 or self.contexts.shape[1] != self.theta.shape[0]:
            raise ValueError(f"contexts {self.contexts.shape} do not match theta {self.theta.shape}")
        if float(self.theta @ self.theta) > self.beta + 1e-12:
            raise ValueError("theta* violates the norm bound beta")
        gammas = self.contexts @ self.theta
        if np.any(gammas < -1e-12) or np.any(gammas > 1 + 1e-12):
            raise ValueError("every attractiveness theta*^T x must lie in [0, 1]")
        return self

    @classmethod
    def generate(
        cls,
        d: int,
        m: int,
        weights: PositionWeights,
        seed: SeedLike = 0,
        beta: Optional[float] = None,
        horizon: int = 1,
        click_model: Union[str, ClickModelType] = ClickModelType.UBM,
        gamma_range: Tuple[float, float] = (GAMMA_FLOOR, GAMMA_CEILING),
        stratified: bool = False,
    ) -> "GroundTruthWorld":
        """
        Draw a world

        theta* is uniform on the sphere of radius 0.9 sqrt(beta). Each arm
        draws a target gamma uniform in ``gamma_range`` (capped by |theta*|)
        and gets the context x = (gamma/|theta|) u + sqrt(1 - (gamma/|theta|)^2) rho v,
        with u the direction of theta*, v a random unit vector orthogonal
        to u and rho uniform in [0, 1), so theta*^T x = gamma and |x| <= 1.
        With ``stratified`` the targets are the m midpoints of an even grid
        over the range, shuffled, so every world has the same gamma profile.

        Args:
            d: Context dimension
            m: Number of arms
            weights: True position weights
            seed: Seed or generator
            beta: Norm bound, defaults to d
            horizon: Planned number of rounds
            click_model: User model
            gamma_range: Bounds of the target attractiveness
            stratified: Use an even gamma grid instead of uniform draws

        Returns:
            GroundTruthWorld
        """
        if d < 1 or m < 1:
            raise InvalidArgumentError(f"need d >= 1 and m >= 1, got d={d}, m={m}")
        low, high = (float(v) for v in gamma_range)
        if not 0.0 <= low < high <= 1.0:
            raise InvalidArgumentError(f"gamma_range must satisfy 0 <= low < high <= 1, got {gamma_range}")
        beta = float(d) if beta is None else float(beta)
        rng = as_generator(seed)
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        norm = THETA_RADIUS_SHARE * np.sqrt(beta)
        theta = norm * direction

        top = min(high, high * norm)
        low = min(low, top)
        if stratified:
            gammas = rng.permutation(low + (top - low) * (np.arange(m) + 0.5) / m)
        else:
            gammas = rng.uniform(low, top, size=m)
        contexts = np.empty((m, d))
        for i, gamma in enumerate(gammas):
            along = gamma / norm
            v = rng.standard_normal(d)
            v -= (v @ direction) * direction
            v_norm = np.linalg.norm(v)
            v = v / v_norm if v_norm > 1e-12 else np.zeros(d)
            rho = rng.uniform(0.0, 1.0)
            contexts[i] = along * direction + np.sqrt(max(1.0 - along**2, 0.0)) * rho * v

        seed_value = seed if isinstance(seed, int) else None
        world = cls(
            theta=theta,
            contexts=contexts,
            weights=weights,
            beta=beta,
            horizon=horizon,
            seed=seed_value,
            click_model=ClickModelType(click_model),
        )
        logger.info(f"Generated world d={d} m={m} model={world.click_model.value}")
        return world

    @property
    def m(self) -> int:
        return int(self.contexts.shape[0])

    @property
    def d(self) -> int:
        return int(self.contexts.shape[1])

    @cached_property
    def gammas(self) -> np.ndarray:
        return self.contexts @ self.theta

    @cached_property
    def pool(self) -> CandidateSet:
        return CandidateSet(arm_ids=list(range(self.m)), contexts=self.contexts)

    def candidates(self) -> CandidateSet:
        """The whole arm pool, offered every round."""
        return self.pool

    @cached_property
    def ranking(self) -> List[int]:
        """All arms by true attractiveness, best first."""
        return [int(i) for i in rank_by_scores(list(range(self.m)), self.gammas, self.m)]

    def optimal_arms(self, K: int) -> List[int]:
        """Top-K arms by true attractiveness, best first."""
        return self.ranking[:K]

    def optimal_scores(self) -> dict:
        """Arm -> true attractiveness, for an oracle policy."""
        return {i: float(g) for i, g in enumerate(self.gammas)}

    def regret(self, arms: Sequence[int]) -> float:
        """Weighted attractiveness gap of a displayed list against the optimal list."""
        K = len(arms)
        g = self.gammas
        first = self.weights.first_examination[:K]
        best = g[self.optimal_arms(K)]
        return float(first @ (best - g[list(arms)]))

    def _satisfaction(self) -> Optional[np.ndarray]:
        if self.click_model is not ClickModelType.DCM:
            return None
        if self.satisfaction is not None:
            return np.asarray(self.satisfaction)
        return satisfaction_from_weights(self.weights)

    def run_round(self, policy: Policy, K: int, rng: SeedLike = None) -> RoundOutcome:
        """
        Play one round: the policy selects, the user clicks, the policy learns

        Args:
            policy: Policy under evaluation
            K: List length
            rng: Seed or generator for the click draw

        Returns:
            RoundOutcome with the instantaneous regret
        """
        selection = policy.select(self.candidates(), K)
        arms = [int(a) for a in selection.arms]
        clicks = simulate_session(
            self.click_model, self.gammas[arms], self.weights, rng, self._satisfaction()
        )
        click_list = [int(c) for c in clicks]
        policy.feedback(selection, click_list)
        return RoundOutcome(selection=selection, clicks=click_list, regret=self.regret(arms))

    def save(self, path: Union[str, Path]) -> Path:
        """Write the world snapshot JSON."""
        path = Path(path)
        doc = {
            "theta": self.theta.tolist(),
            "contexts": self.contexts.tolist(),
            "weights": self.weights.model_dump(),
            "beta": self.beta,
            "horizon": self.horizon,
            "seed": self.seed,
            "click_model": self.click_model.value,
            "satisfaction": self.satisfaction,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GroundTruthWorld":
        """Read a world snapshot JSON."""
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        try:
            return cls(
                theta=np.array(doc["theta"], dtype=np.float64),
                contexts=np.array(doc["contexts"], dtype=np.float64),
                weights=PositionWeights.model_validate(doc["weights"]),
                beta=doc["beta"],
                horizon=doc["horizon"],
                seed=doc.get("seed"),
                click_model=ClickModelType(doc["click_model"]),
                satisfaction=doc.get("satisfaction"),
            )
        except (ValueError, KeyError) as e:
            raise InvalidArgumentError(f"invalid world file {path}: {e}") from e


def run_round(world: GroundTruthWorld, policy: Policy, K: int, rng: SeedLike = None) -> RoundOutcome:
    """Module-level form of ``GroundTruthWorld.run_round``."""
    return world.run_round(policy, K, rng)
