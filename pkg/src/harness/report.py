"""
Run reports, aggregation across seeds and the CTR lift table
"""

import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from ..core.exceptions import InvalidArgumentError
from ..utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"
RUN_COLUMNS = [
    "mode",
    "algorithm",
    "K",
    "seed",
    "t",
    "ctr_sum",
    "ctr_set",
    "regret",
    "bound",
    "bound_no_constant",
    "skipped",
]
METRICS = ["ctr_sum", "ctr_set", "regret"]


class Checkpoint(BaseModel):
    """Cumulative metrics after t rounds"""

    t: int = Field(..., ge=1)
    ctr_sum: float
    ctr_set: float
    regret: Optional[float] = Field(default=None, description="Cumulative regret surrogate, synthetic only")
    bound: Optional[float] = Field(default=None, description="Regret bound including the +1 term")
    bound_no_constant: Optional[float] = Field(default=None, description="Regret bound without the +1 term")


class RunReport(BaseModel):
    """Outcome of one (K, algorithm, seed) run"""

    mode: str
    algorithm: str
    K: int
    seed: int
    checkpoints: List[Checkpoint] = Field(default_factory=list)
    skipped: int = Field(default=0, description="Replay rounds skipped on propensity misses")
    wall_clock_seconds: float = 0.0
    snapshot_path: Optional[str] = None
    error: Optional[str] = None

    @field_validator("checkpoints")
    @classmethod
    def _increasing(cls, value: List[Checkpoint]) -> List[Checkpoint]:
        for prev, cur in zip(value, value[1:]):
            if cur.t <= prev.t:
                raise ValueError(f"checkpoints must be strictly increasing in t, got {prev.t} then {cur.t}")
        return value

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def final(self) -> Checkpoint:
        if not self.checkpoints:
            raise InvalidArgumentError(f"run {self.algorithm}/K={self.K}/seed={self.seed} has no checkpoints")
        return self.checkpoints[-1]


def checkpoint_schedule(T: int, first: int = 100) -> List[int]:
    """Rounds 100, 200, 400, ... below T, then T itself."""
    if T < 1:
        raise InvalidArgumentError(f"horizon must be >= 1, got {T}")
    points = []
    t = first
    while t < T:
        points.append(t)
        t *= 2
    points.append(T)
    return points


def runs_frame(reports: Sequence[RunReport]) -> pd.DataFrame:
    """One row per (run, checkpoint) of every successful run."""
    rows = [
        [r.mode, r.algorithm, r.K, r.seed, c.t, c.ctr_sum, c.ctr_set, c.regret, c.bound,
         c.bound_no_constant, r.skipped]
        for r in reports
        if r.ok
        for c in r.checkpoints
    ]
    return pd.DataFrame(rows, columns=RUN_COLUMNS)


def reports_from_frame(frame: pd.DataFrame) -> List[RunReport]:
    """Rebuild reports from a runs.csv table."""
    reports = []
    for (mode, algorithm, K, seed), rows in frame.groupby(["mode", "algorithm", "K", "seed"], sort=False):
        rows = rows.sort_values("t")
        checkpoints = [
            Checkpoint(
                t=int(row.t),
                ctr_sum=float(row.ctr_sum),
                ctr_set=float(row.ctr_set),
                regret=None if pd.isna(row.regret) else float(row.regret),
                bound=None if pd.isna(row.bound) else float(row.bound),
                bound_no_constant=None if pd.isna(row.bound_no_constant) else float(row.bound_no_constant),
            )
            for row in rows.itertuples()
        ]
        reports.append(
            RunReport(
                mode=str(mode),
                algorithm=str(algorithm),
                K=int(K),
                seed=int(seed),
                checkpoints=checkpoints,
                skipped=int(rows["skipped"].iloc[-1]),
            )
        )
    return reports


def summarize(reports: Sequence[RunReport]) -> pd.DataFrame:
    """
    Mean and standard error across seeds

    Returns:
        One row per (algorithm, K, t) with n_seeds, <metric>_mean and
        <metric>_se for CTR_sum, CTR_set and regret, plus the mean bounds
    """
    frame = runs_frame(reports)
    columns = ["algorithm", "K", "t", "n_seeds"]
    for metric in METRICS:
        columns += [f"{metric}_mean", f"{metric}_se"]
    columns += ["bound", "bound_no_constant"]
    if frame.empty:
        return pd.DataFrame(columns=columns)

    rows = []
    for (algorithm, K, t), group in frame.groupby(["algorithm", "K", "t"], sort=False):
        n = len(group)
        row: List[object] = [algorithm, K, t, n]
        for metric in METRICS:
            values = group[metric].dropna().to_numpy(dtype=np.float64)
            if values.size == 0:
                row += [np.nan, np.nan]
                continue
            se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
            row += [float(np.mean(values)), se]
        row += [group["bound"].mean(), group["bound_no_constant"].mean()]
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def lift(value: float, baseline: float) -> float:
    """Percentage lift of value over baseline."""
    if baseline == 0:
        return float("nan")
    return (value - baseline) / baseline * 100.0


def compare_table(reports: Sequence[RunReport], baseline: str = "C2UCB") -> pd.DataFrame:
    """
    CTR lift table at the final checkpoint

    Columns run ``K=<k> CTR_sum``, ``K=<k> CTR_sum lift %``, ``K=<k> CTR_set``,
    ``K=<k> CTR_set lift %`` for each K in ascending order; rows are
    algorithms. Values are means over seeds.

    Args:
        reports: Successful runs of at least two algorithms
        baseline: Algorithm the lifts are measured against

    Returns:
        DataFrame indexed by algorithm
    """
    ok = [r for r in reports if r.ok]
    algorithms = list(dict.fromkeys(r.algorithm for r in ok))
    if len(algorithms) < 2:
        raise InvalidArgumentError(f"need at least two algorithms to compare, got {algorithms}")
    if baseline not in algorithms:
        raise InvalidArgumentError(f"baseline {baseline} has no runs")

    Ks = sorted({r.K for r in ok})
    table: Dict[str, Dict[str, float]] = {a: {} for a in algorithms}
    for K in Ks:
        runs = [r for r in ok if r.K == K]
        schedules = {tuple(c.t for c in r.checkpoints) for r in runs}
        if len(schedules) != 1:
            raise InvalidArgumentError(f"runs at K={K} have mismatched checkpoints")
        means = {
            a: {
                metric: float(np.mean([getattr(r.final, metric) for r in runs if r.algorithm == a]))
                for metric in ("ctr_sum", "ctr_set")
            }
            for a in algorithms
            if any(r.algorithm == a for r in runs)
        }
        if baseline not in means:
            raise InvalidArgumentError(f"baseline {baseline} has no runs at K={K}")
        for a, values in means.items():
            for metric, label in (("ctr_sum", "CTR_sum"), ("ctr_set", "CTR_set")):
                table[a][f"K={K} {label}"] = values[metric]
                table[a][f"K={K} {label} lift %"] = lift(values[metric], means[baseline][metric])

    columns = [
        f"K={K} {label}{suffix}"
        for K in Ks
        for label in ("CTR_sum", "CTR_set")
        for suffix in ("", " lift %")
    ]
    frame = pd.DataFrame.from_dict(table, orient="index").reindex(columns=columns)
    frame.index.name = "algorithm"
    return frame


def write_reports(
    reports: Sequence[RunReport], out_dir: Union[str, Path], baseline: Optional[str] = None
) -> Dict[str, Path]:
    """
    Write runs.csv, summary.csv, runs.json and, when possible, lift.csv

    CSV bodies hold only deterministic values; wall-clock times and
    failures go to runs.json.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"runs": out / "runs.csv", "summary": out / "summary.csv", "meta": out / "runs.json"}
    runs_frame(reports).to_csv(paths["runs"], index=False, float_format=FLOAT_FORMAT)
    summarize(reports).to_csv(paths["summary"], index=False, float_format=FLOAT_FORMAT)

    meta = [
        {
            "algorithm": r.algorithm,
            "K": r.K,
            "seed": r.seed,
            "wall_clock_seconds": r.wall_clock_seconds,
            "snapshot_path": r.snapshot_path,
            "error": r.error,
        }
        for r in reports
    ]
    with open(paths["meta"], "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)

    if baseline is not None:
        try:
            table = compare_table(reports, baseline)
        except InvalidArgumentError as e:
            logger.info(f"No lift table written: {e}")
        else:
            paths["lift"] = out / "lift.csv"
            table.to_csv(paths["lift"], float_format=FLOAT_FORMAT)
    logger.info(f"Wrote reports for {len(reports)} runs to {out}")
    return paths


def load_reports(run_dir: Union[str, Path]) -> List[RunReport]:
    """Read the runs.csv of a finished experiment."""
    path = Path(run_dir) / "runs.csv"
    if not path.is_file():
        raise InvalidArgumentError(f"no runs.csv in {run_dir}")
    return reports_from_frame(pd.read_csv(path, float_precision="round_trip"))
