"""
Data models for offline replay evaluation
"""

from collections import Counter
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

from ..click_models.models import SessionRecord
from ..core.exceptions import InvalidArgumentError
from ..core.models import slot_count
from ..utils.logger import get_logger

logger = get_logger(__name__)


class GroupBy(str, Enum):
    """How logged records are grouped into replay contexts"""

    DISPLAYED = "displayed"
    USER = "user"


class ReplayGroup(BaseModel):
    """
    Records sharing one context X

    Attributes:
        key: Group key
        candidates: Arms offered when this group is drawn, sorted
        records: Logged sessions, each of length K
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    key: str = Field(..., description="Context key X")
    candidates: List[str] = Field(..., description="Candidate arm ids, sorted")
    records: List[SessionRecord] = Field(..., min_length=1, description="Logged sessions")

    _click_counts: Counter = PrivateAttr(default_factory=Counter)

    def model_post_init(self, __context: object) -> None:
        counts: Counter = Counter()
        for record in self.records:
            for item, c in zip(record.displayed, record.clicks):
                if c:
                    counts[item] += 1
        self._click_counts = counts

    @property
    def size(self) -> int:
        """|D(.|X)|"""
        return len(self.records)

    def click_count(self, arm: str) -> int:
        """Logged clicks on ``arm`` over all records of the group."""
        return self._click_counts.get(arm, 0)

    def logged_context(self, arm: str) -> Optional[np.ndarray]:
        """First logged context of ``arm`` in this group, if records carry contexts."""
        for record in self.records:
            if record.contexts is not None and arm in record.displayed:
                return np.asarray(record.contexts[record.displayed.index(arm)])
        return None


class ReplayDataset(BaseModel):
    """Logged sessions grouped by context key"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    K: int = Field(..., ge=1, description="List length used by the replay")
    group_by: GroupBy = Field(default=GroupBy.DISPLAYED)
    groups: Dict[str, ReplayGroup] = Field(..., description="Groups by key, in first-seen order")

    @staticmethod
    def group_key(record: SessionRecord, group_by: GroupBy) -> str:
        if group_by is GroupBy.USER:
            return record.user_id
        return "|".join(sorted(record.displayed))

    @classmethod
    def from_sessions(
        cls, records: Iterable[SessionRecord], K: int, group_by: str = "displayed"
    ) -> "ReplayDataset":
        """
        Group logged sessions into replay contexts

        Records longer than K are cut to their first K positions; shorter
        records are rejected.

        Args:
            records: Logged sessions
            K: List length
            group_by: ``displayed`` keys a group by the multiset of displayed
                ids; ``user`` keys it by user token and offers the union of
                arms shown to that user

        Returns:
            ReplayDataset with at least one group
        """
        try:
            mode = GroupBy(group_by)
        except ValueError:
            raise InvalidArgumentError(f"unknown grouping {group_by!r}") from None

        buckets: Dict[str, List[SessionRecord]] = {}
        for record in records:
            if record.K < K:
                raise InvalidArgumentError(
                    f"record of user {record.user_id} shows {record.K} items, need {K}"
                )
            if record.K > K:
                record = SessionRecord(
                    user_id=record.user_id,
                    displayed=record.displayed[:K],
                    clicks=record.clicks[:K],
                    contexts=None if record.contexts is None else record.contexts[:K],
                )
            buckets.setdefault(cls.group_key(record, mode), []).append(record)
        if not buckets:
            raise InvalidArgumentError("replay dataset is empty")

        groups = {}
        for key, members in buckets.items():
            arms = sorted({item for r in members for item in r.displayed})
            groups[key] = ReplayGroup(key=key, candidates=arms, records=members)
        logger.info(
            f"Grouped {sum(g.size for g in groups.values())} records into "
            f"{len(groups)} {mode.value} groups"
        )
        return cls(K=K, group_by=mode, groups=groups)

    @property
    def keys(self) -> List[str]:
        return list(self.groups)

    @property
    def items(self) -> List[str]:
        """Every arm id in the dataset, sorted."""
        return sorted({arm for g in self.groups.values() for arm in g.candidates})

    @property
    def n_records(self) -> int:
        return sum(g.size for g in self.groups.values())


class PropensityTable(BaseModel):
    """
    Empirical logging distribution pi(a, k, k' | X)

    Each vector has one entry per slot in ``tilde_w`` order.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    K: int = Field(..., ge=1)
    vectors: Dict[Tuple[str, str], np.ndarray] = Field(default_factory=dict)

    def vector(self, group_key: str, arm: str) -> np.ndarray:
        """Slot distribution of ``arm`` in a group; zeros when never logged there."""
        found = self.vectors.get((group_key, arm))
        return np.zeros(slot_count(self.K)) if found is None else found

    def examination(self, group_key: str, arm: str, tilde_w: np.ndarray) -> float:
        """<W~, pi(arm, ., . | X)>"""
        return float(tilde_w @ self.vector(group_key, arm))
