"""
Weighted online ridge regression

A = lambda*I + sum w^2 x x^T and b = sum w r x, with A^-1 kept current by
Sherman-Morrison rank-1 updates and rebuilt from a Cholesky factorization
every ``refactor_every`` samples to bound drift.
"""

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from config.settings import settings
from .exceptions import InvalidArgumentError
from ..utils.logger import get_logger

logger = get_logger(__name__)

Sample = Tuple[float, Sequence[float], float]


class RidgeState:
    """
    Online ridge regression accumulator

    Attributes:
        d: Context dimension
        lam: Regularizer lambda
        A: Design matrix
        A_inv: Cached inverse of A
        b: Reward-weighted context sum
        theta: Cached solution A_inv @ b
        update_count: Number of samples absorbed
    """

    def __init__(self, d: int, lam: float, refactor_every: Optional[int] = None):
        if int(d) != d or d < 1:
            raise InvalidArgumentError(f"dimension must be a positive integer, got {d}")
        if not lam > 0:
            raise InvalidArgumentError(f"lambda must be positive, got {lam}")
        self.d = int(d)
        self.lam = float(lam)
        self.refactor_every = refactor_every or settings.ridge_refactor_every
        self.A = self.lam * np.eye(self.d)
        self.A_inv = np.eye(self.d) / self.lam
        self.b = np.zeros(self.d)
        self.theta = np.zeros(self.d)
        self.update_count = 0

    def _check_context(self, x: Sequence[float]) -> np.ndarray:
        vec = np.asarray(x, dtype=np.float64)
        if vec.shape != (self.d,):
            raise InvalidArgumentError(f"context of shape {vec.shape} does not match d={self.d}")
        return vec

    def update(self, samples: Iterable[Sample]) -> "RidgeState":
        """
        Absorb weighted samples

        Args:
            samples: (weight, context, reward) triples; weights in [0, 1]

        Returns:
            self, updated in place
        """
        checked = []
        for w, x, r in samples:
            if not 0.0 <= w <= 1.0:
                raise InvalidArgumentError(f"sample weight {w} is outside [0, 1]")
            checked.append((float(w), self._check_context(x), float(r)))
        if not checked:
            return self

        for w, x, r in checked:
            z = w * x
            self.A += np.outer(z, z)
            self.b += w * r * x
            Az = self.A_inv @ z
            self.A_inv -= np.outer(Az, Az) / (1.0 + z @ Az)
            self.update_count += 1
            if self.update_count % self.refactor_every == 0:
                self.refactor()
        self.theta = self.A_inv @ self.b
        return self

    def refactor(self) -> None:
        """Rebuild A_inv from a Cholesky factorization of A."""
        factor = cho_factor(self.A, lower=True)
        self.A_inv = cho_solve(factor, np.eye(self.d))
        self.A_inv = 0.5 * (self.A_inv + self.A_inv.T)
        self.theta = self.A_inv @ self.b
        logger.debug(f"Refactored ridge inverse after {self.update_count} updates")

    def ucb(self, x: Sequence[float], alpha: float) -> float:
        """theta^T x + alpha * sqrt(x^T A_inv x)."""
        if alpha < 0:
            raise InvalidArgumentError(f"alpha must be non-negative, got {alpha}")
        vec = self._check_context(x)
        variance = max(float(vec @ self.A_inv @ vec), 0.0)
        return float(self.theta @ vec) + alpha * np.sqrt(variance)

    def ucb_batch(self, contexts: np.ndarray, alpha: float) -> np.ndarray:
        """Index of every row of an m x d context matrix."""
        if alpha < 0:
            raise InvalidArgumentError(f"alpha must be non-negative, got {alpha}")
        X = np.asarray(contexts, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise InvalidArgumentError(f"contexts of shape {X.shape} do not match d={self.d}")
        variance = np.einsum("ij,jk,ik->i", X, self.A_inv, X)
        return X @ self.theta + alpha * np.sqrt(np.maximum(variance, 0.0))

    def copy(self) -> "RidgeState":
        clone = RidgeState(self.d, self.lam, self.refactor_every)
        clone.A = self.A.copy()
        clone.A_inv = self.A_inv.copy()
        clone.b = self.b.copy()
        clone.theta = self.theta.copy()
        clone.update_count = self.update_count
        return clone


def ridge_init(d: int, lam: float) -> RidgeState:
    """A = lambda*I, b = 0, theta = 0."""
    return RidgeState(d, lam)


def ridge_update(state: RidgeState, samples: Iterable[Sample]) -> RidgeState:
    """Apply (weight, context, reward) samples to ``state``."""
    return state.update(samples)


def ucb_index(state: RidgeState, x: Sequence[float], alpha: float) -> float:
    """Upper confidence index of a single context."""
    return state.ucb(x, alpha)
