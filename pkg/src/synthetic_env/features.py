"""
Per-(user, item) features from a session log

Sessions are turned into a user x item attractiveness matrix with the
position-debiased click ratio, factorized by a truncated randomized SVD,
and each pair (i, j) gets the context [U(i), V(j)].
"""

import json
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config.settings import settings
from ..click_models.models import SessionRecord
from ..core.exceptions import InvalidArgumentError
from ..core.models import PositionWeights, normalize_context
from ..offline_eval.estimator import build_propensities
from ..offline_eval.models import ReplayDataset
from ..utils.logger import get_logger
from ..utils.rng import SeedLike, as_generator
from .matrix_io import load_matrices, save_matrices

logger = get_logger(__name__)


class AttractivenessMatrix(BaseModel):
    """User x item attractiveness estimates with their id orderings"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray = Field(..., description="u x m matrix with entries in [0, 1]")
    user_ids: List[str]
    item_ids: List[str]
    clamped: int = Field(default=0, description="Entries above 1 that were clamped")


def build_attractiveness_matrix(
    sessions: Sequence[SessionRecord], weights: PositionWeights, K: Optional[int] = None
) -> AttractivenessMatrix:
    """
    Estimate M(i, j) for every user i and item j

    M(i, j) is the clicks on j in user i's records divided by |D(.|i)|,
    over <W~, pi(j, ., . | i)>, clamped to [0, 1]. Pairs that never
    co-occur get 0.

    Args:
        sessions: Logged sessions
        weights: Fitted position weights
        K: Positions used per session; defaults to the shortest session,
            capped at weights.K

    Returns:
        AttractivenessMatrix with users and items sorted by id
    """
    if not sessions:
        raise InvalidArgumentError("no sessions to build the attractiveness matrix from")
    K = K or min(weights.K, min(s.K for s in sessions))
    dataset = ReplayDataset.from_sessions(sessions, K, group_by="user")
    table = build_propensities(dataset, weights)
    tilde_w = weights.tilde_w[: K * (K + 1) // 2]

    user_ids = sorted(dataset.groups)
    item_ids = dataset.items
    column = {item: j for j, item in enumerate(item_ids)}
    M = np.zeros((len(user_ids), len(item_ids)))
    for i, user in enumerate(user_ids):
        group = dataset.groups[user]
        for item in group.candidates:
            clicks = group.click_count(item)
            examined = table.examination(user, item, tilde_w)
            if clicks and examined > 0.0:
                M[i, column[item]] = clicks / group.size / examined
    clamped = int(np.count_nonzero(M > 1.0))
    if clamped:
        logger.warning(f"Clamped {clamped} attractiveness entries above 1")
    np.clip(M, 0.0, 1.0, out=M)
    logger.info(f"Built {M.shape[0]}x{M.shape[1]} attractiveness matrix")
    return AttractivenessMatrix(values=M, user_ids=user_ids, item_ids=item_ids, clamped=clamped)


class FeatureFactorization(BaseModel):
    """Truncated SVD M ~ U diag(S) V^T"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    U: np.ndarray = Field(..., description="u x rank, orthonormal columns")
    S: np.ndarray = Field(..., description="rank singular values, descending")
    V: np.ndarray = Field(..., description="m x rank, orthonormal columns")
    user_ids: Optional[List[str]] = None
    item_ids: Optional[List[str]] = None

    @property
    def rank(self) -> int:
        return int(self.S.shape[0])

    @property
    def dimension(self) -> int:
        """Length of a context built from this factorization."""
        return 2 * self.rank

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T

    def context_for(self, user_id: str, item_id: str) -> np.ndarray:
        """Context of a (user, item) pair addressed by id."""
        if self.user_ids is None or self.item_ids is None:
            raise InvalidArgumentError("factorization carries no id orderings")
        try:
            i, j = self.user_ids.index(user_id), self.item_ids.index(item_id)
        except ValueError:
            raise InvalidArgumentError(f"unknown user {user_id} or item {item_id}") from None
        return make_context(i, j, self)

    def save(self, path: Union[str, Path]) -> Path:
        """
        Write ``path`` (U, S as one row, V) and a sibling ``.json`` with the id orderings
        """
        path = Path(path)
        save_matrices(path, [self.U, self.S[None, :], self.V])
        meta = {"rank": self.rank, "user_ids": self.user_ids, "item_ids": self.item_ids}
        with open(path.with_suffix(".json"), "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2)
        logger.info(f"Saved rank-{self.rank} factorization to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FeatureFactorization":
        path = Path(path)
        blocks = load_matrices(path)
        if len(blocks) != 3:
            raise InvalidArgumentError(f"{path} holds {len(blocks)} matrices, expected U, S, V")
        U, S, V = blocks
        meta_path = path.with_suffix(".json")
        meta = {}
        if meta_path.exists():
            with open(meta_path, "r", encoding="utf-8") as f:
                meta = json.load(f)
        return cls(U=U, S=S[0], V=V, user_ids=meta.get("user_ids"), item_ids=meta.get("item_ids"))


def _orthonormal(matrix: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(matrix)
    return q


def truncated_svd(
    M: np.ndarray,
    rank: Optional[int] = None,
    oversampling: Optional[int] = None,
    power_iterations: Optional[int] = None,
    seed: SeedLike = 0,
) -> FeatureFactorization:
    """
    Randomized truncated SVD

    Gaussian range finder with ``oversampling`` extra columns, refined by
    ``power_iterations`` rounds of re-orthonormalized power iteration, then
    an exact SVD of the small projected matrix.

    Args:
        M: u x m matrix
        rank: Number of components
        oversampling: Extra sketch columns p
        power_iterations: Power iterations q
        seed: Seed or generator for the sketch

    Returns:
        FeatureFactorization of the given rank
    """
    rank = settings.svd_rank if rank is None else rank
    p = settings.svd_oversampling if oversampling is None else oversampling
    q = settings.svd_power_iterations if power_iterations is None else power_iterations
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {A.shape}")
    if rank < 1 or rank > min(A.shape):
        raise InvalidArgumentError(f"rank {rank} must be in [1, {min(A.shape)}]")

    rng = as_generator(seed)
    width = min(rank + p, min(A.shape))
    omega = rng.standard_normal((A.shape[1], width))
    Q = _orthonormal(A @ omega)
    for _ in range(q):
        Q = _orthonormal(A @ _orthonormal(A.T @ Q))
    B = Q.T @ A
    Ub, S, Vt = np.linalg.svd(B, full_matrices=False)
    logger.debug(f"Randomized SVD of {A.shape} with sketch width {width}, q={q}")
    return FeatureFactorization(U=Q @ Ub[:, :rank], S=S[:rank], V=Vt[:rank].T)


def make_context(i: int, j: int, fact: FeatureFactorization) -> np.ndarray:
    """
    Feature vector of user row i and item row j

    Returns:
        [U(i), V(j)] of length 2 * rank, rescaled to unit norm if longer
    """
    if not 0 <= i < fact.U.shape[0]:
        raise InvalidArgumentError(f"user index {i} out of range [0, {fact.U.shape[0]})")
    if not 0 <= j < fact.V.shape[0]:
        raise InvalidArgumentError(f"item index {j} out of range [0, {fact.V.shape[0]})")
    return normalize_context(np.concatenate([fact.U[i], fact.V[j]]))
