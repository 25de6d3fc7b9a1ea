"""
Data models for click logs and fitted click-model parameters
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ClickModelType(str, Enum):
    """User behaviour models available to the simulator"""

    UBM = "UBM"
    PBM = "PBM"
    CM = "CM"
    DCM = "DCM"


class SessionRecord(BaseModel):
    """One logged round: who saw which list and what they clicked"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    user_id: str = Field(..., description="Opaque user token")
    displayed: List[str] = Field(..., description="Item ids in display order, position 1 first")
    clicks: List[int] = Field(..., description="Click indicator per displayed position")
    contexts: Optional[np.ndarray] = Field(
        default=None, description="Optional context per displayed item, shape (K, d)"
    )

    @field_validator("clicks")
    @classmethod
    def _binary_clicks(cls, value: List[int]) -> List[int]:
        if any(c not in (0, 1) for c in value):
            raise ValueError(f"clicks must be 0 or 1, got {value}")
        return value

    @model_validator(mode="after")
    def _check_alignment(self) -> "SessionRecord":
        if len(set(self.displayed)) != len(self.displayed):
            raise ValueError(f"displayed items must be distinct: {self.displayed}")
        if len(self.clicks) != len(self.displayed):
            raise ValueError(
                f"{len(self.clicks)} clicks for {len(self.displayed)} displayed items"
            )
        if self.contexts is not None and len(self.contexts) != len(self.displayed):
            raise ValueError("one context per displayed item is required")
        return self

    @property
    def K(self) -> int:
        return len(self.displayed)


class AttractivenessTable(BaseModel):
    """Fitted gamma per arm, or per (user, arm) when ``per_user`` is set"""

    per_user: bool = Field(default=False, description="Keys are (user, arm) pairs")
    values: Dict[Any, float] = Field(default_factory=dict, description="key -> gamma in [0, 1]")

    @field_validator("values")
    @classmethod
    def _in_unit_interval(cls, value: Dict[Any, float]) -> Dict[Any, float]:
        for key, gamma in value.items():
            if not 0.0 <= gamma <= 1.0:
                raise ValueError(f"attractiveness {gamma} of {key} is outside [0, 1]")
        return value

    def gamma(self, arm: str, user: Optional[str] = None) -> float:
        key: Any = (user, arm) if self.per_user else arm
        return self.values[key]

    def __contains__(self, key: Any) -> bool:
        return key in self.values

    def __len__(self) -> int:
        return len(self.values)


class UBMFit(BaseModel):
    """Result of fitting the user browsing model"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: Any = Field(..., description="Fitted PositionWeights")
    attractiveness: AttractivenessTable
    log_likelihood: float = Field(..., description="Final mean per-observation log-likelihood")
    history: List[float] = Field(default_factory=list, description="Log-likelihood per iteration")
    iterations: int = 0
    converged: bool = False

    def as_tuple(self) -> Tuple[Any, AttractivenessTable, float]:
        """Fitted (weights, attractiveness, log-likelihood)."""
        return self.weights, self.attractiveness, self.log_likelihood


def clicks_matrix(sessions: List[SessionRecord]) -> np.ndarray:
    """Stack the click vectors of equal-length sessions into an n x K array."""
    return np.array([s.clicks for s in sessions], dtype=np.int8)
