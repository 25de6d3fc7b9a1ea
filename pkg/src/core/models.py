"""
Domain types shared by all modules
"""

import json
import warnings
from pathlib import Path
from typing import Any, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    ValidationError,
    field_validator,
    model_validator,
)

from .exceptions import InvalidArgumentError
from ..utils.logger import get_logger

logger = get_logger(__name__)

ArmId = Hashable


def slot_index(k: int, k_prime: int) -> int:
    """Position of slot (k, k') in the flattened examination vector."""
    return k * (k - 1) // 2 + k_prime


def slot_count(K: int) -> int:
    """Number of (k, k') slots for a list of length K."""
    return K * (K + 1) // 2


def normalize_context(x: Any) -> np.ndarray:
    """Return x as a float64 vector rescaled to unit norm if its norm exceeds 1."""
    vec = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm > 1.0:
        vec = vec / norm
    return vec


class PositionWeights(BaseModel):
    """
    Examination probabilities w[k][k'] of a list of length K

    ``table[k-1]`` holds w[k][0..k-1], so the JSON form is the row-major
    lower triangle. Positions are 1-based in every accessor.
    """

    K: int = Field(..., ge=1, description="List length")
    table: List[List[float]] = Field(..., description="Row k holds w[k][0..k-1]")

    _matrix: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def _check_table(self) -> "PositionWeights":
        if len(self.table) != self.K:
            raise ValueError(f"table has {len(self.table)} rows, expected K={self.K}")
        for k, row in enumerate(self.table, start=1):
            if len(row) != k:
                raise ValueError(f"row for position {k} has {len(row)} entries, expected {k}")
            for w in row:
                if not (0.0 <= w <= 1.0):
                    raise ValueError(f"weight {w} at position {k} is outside [0, 1]")
        return self

    def model_post_init(self, __context: Any) -> None:
        matrix = np.zeros((self.K, self.K), dtype=np.float64)
        for k, row in enumerate(self.table):
            matrix[k, : k + 1] = row
        self._matrix = matrix

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "PositionWeights":
        """Build from a K x K array whose entry [k-1, k'] is w[k][k']."""
        matrix = np.asarray(matrix, dtype=np.float64)
        K = matrix.shape[0]
        return cls(K=K, table=[[float(v) for v in matrix[k, : k + 1]] for k in range(K)])

    @classmethod
    def from_distance_profile(cls, profile: Sequence[float]) -> "PositionWeights":
        """
        Build monotone weights from a non-increasing distance profile

        Args:
            profile: profile[i] is the weight of a position i+1 slots below the
                last click (or below the top of the list when nothing was clicked)

        Returns:
            PositionWeights with w[k][k'] = profile[k - k' - 1]
        """
        K = len(profile)
        return cls(K=K, table=[[float(profile[k - kp - 1]) for kp in range(k)] for k in range(1, K + 1)])

    @classmethod
    def geometric(cls, K: int, decay: float) -> "PositionWeights":
        """Weights w[k][k'] = decay ** (k - k')."""
        if not 0.0 < decay <= 1.0:
            raise InvalidArgumentError(f"decay must be in (0, 1], got {decay}")
        return cls.from_distance_profile([decay ** (i + 1) for i in range(K)])

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PositionWeights":
        """Read a weights JSON file."""
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        try:
            return cls.model_validate(doc)
        except ValidationError as e:
            raise InvalidArgumentError(f"invalid weights file {path}: {e}") from e

    def save(self, path: Union[str, Path]) -> None:
        """Write the weights JSON file."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=2))

    @property
    def matrix(self) -> np.ndarray:
        """K x K array with entry [k-1, k'] = w[k][k']; read-only view."""
        view = self._matrix.view()
        view.flags.writeable = False
        return view

    def w(self, k: int, k_prime: int) -> float:
        """Examination probability of position k when the last click was at k'."""
        if not (1 <= k <= self.K and 0 <= k_prime < k):
            raise InvalidArgumentError(f"invalid slot (k={k}, k'={k_prime}) for K={self.K}")
        return float(self._matrix[k - 1, k_prime])

    @property
    def first_examination(self) -> np.ndarray:
        """Vector of w[k][0] for k = 1..K."""
        return self._matrix[:, 0].copy()

    @property
    def tilde_w(self) -> np.ndarray:
        """Flattened vector [w10, w20, w21, ..., w_{K,K-1}]."""
        return np.concatenate([self._matrix[k, : k + 1] for k in range(self.K)])

    @property
    def phi_w_prime(self) -> float:
        """Sum over k of w[k][k-1] squared."""
        diag = np.array([self._matrix[k, k] for k in range(self.K)])
        return float(np.sum(diag ** 2))

    def slots(self) -> List[Tuple[int, int]]:
        """All (k, k') pairs in tilde_w order."""
        return [(k, kp) for k in range(1, self.K + 1) for kp in range(k)]

    def monotonicity_violations(self, tol: float = 1e-12) -> List[str]:
        """
        List every violated ordering assumption

        Checks w[j+1][j] >= w[j+2][j] >= ... >= w[K][j] for each j and
        w[k][k-1] >= w[k][k-2] >= ... >= w[k][0] for each k.
        """
        m = self._matrix
        violations = []
        for j in range(self.K):
            for k in range(j + 1, self.K):
                if m[k, j] > m[k - 1, j] + tol:
                    violations.append(f"w[{k + 1}][{j}]={m[k, j]:.4g} > w[{k}][{j}]={m[k - 1, j]:.4g}")
        for k in range(self.K):
            for kp in range(k):
                if m[k, kp] > m[k, kp + 1] + tol:
                    violations.append(f"w[{k + 1}][{kp}]={m[k, kp]:.4g} > w[{k + 1}][{kp + 1}]={m[k, kp + 1]:.4g}")
        return violations

    def warn_if_not_monotone(self) -> List[str]:
        """Emit a warning for each monotonicity violation and return them."""
        violations = self.monotonicity_violations()
        if violations:
            message = "position weights are not monotone: " + "; ".join(violations)
            logger.warning(message)
            warnings.warn(message, RuntimeWarning, stacklevel=2)
        return violations


class AlphaParams(BaseModel):
    """Constants of the exploration schedule"""

    d: int = Field(..., ge=1, description="Context dimension")
    lam: float = Field(..., description="Ridge regularizer lambda")
    beta: float = Field(..., gt=0, description="Bound on the squared norm of theta*")
    phi_w_prime: float = Field(..., ge=0, description="Sum of squared w[k][k-1]")
    K: int = Field(..., ge=1, description="List length")
    horizon: int = Field(default=1, ge=1, description="Horizon T")

    @model_validator(mode="after")
    def _check_lambda(self) -> "AlphaParams":
        if self.lam < 1.0:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if self.lam < self.phi_w_prime:
            raise ValueError(f"lambda={self.lam} must be >= phi_w_prime={self.phi_w_prime}")
        return self

    @classmethod
    def for_phi(cls, d: int, phi: float, K: int, horizon: int = 1, beta: Optional[float] = None) -> "AlphaParams":
        """Schedule constants with lambda = max(1, phi) and beta = d unless given."""
        return cls(
            d=d,
            lam=max(1.0, phi),
            beta=float(d) if beta is None else beta,
            phi_w_prime=phi,
            K=K,
            horizon=horizon,
        )


class CandidateSet(BaseModel):
    """Arms offered in one round together with their contexts"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    arm_ids: List[Any] = Field(..., description="Distinct arm identifiers")
    contexts: np.ndarray = Field(..., description="m x d context matrix aligned with arm_ids")

    @field_validator("contexts", mode="before")
    @classmethod
    def _as_matrix(cls, value: Any) -> np.ndarray:
        matrix = np.array(value, dtype=np.float64, ndmin=2)
        norms = np.linalg.norm(matrix, axis=1)
        over = norms > 1.0
        if np.any(over):
            matrix[over] = matrix[over] / norms[over, None]
        return matrix

    @model_validator(mode="after")
    def _check_alignment(self) -> "CandidateSet":
        if len(set(self.arm_ids)) != len(self.arm_ids):
            raise ValueError("candidate arm ids must be distinct")
        if self.contexts.shape[0] != len(self.arm_ids):
            raise ValueError(
                f"{self.contexts.shape[0]} contexts for {len(self.arm_ids)} arms"
            )
        return self

    @property
    def m(self) -> int:
        return len(self.arm_ids)

    @property
    def d(self) -> int:
        return int(self.contexts.shape[1])

    def context_of(self, arm: Any) -> np.ndarray:
        return self.contexts[self.arm_ids.index(arm)]


class SelectionResult(BaseModel):
    """Ordered list chosen for display, position 1 first"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    arms: List[Any] = Field(..., description="Selected arm ids in display order")
    scores: List[float] = Field(..., description="Index value of each selected arm")
    contexts: Optional[np.ndarray] = Field(default=None, description="Contexts of the selected arms")

    @model_validator(mode="after")
    def _check(self) -> "SelectionResult":
        if len(set(self.arms)) != len(self.arms):
            raise ValueError("selected arms must be distinct")
        if len(self.scores) != len(self.arms):
            raise ValueError("one score per selected arm is required")
        return self

    @property
    def K(self) -> int:
        return len(self.arms)
