"""
Experiment execution

Every (K, algorithm, seed) triple is an independent task. Synthetic runs
share one world per seed across algorithms; clicks and replay draws come
from the algorithm's own substream, so results do not depend on the
worker count or execution order.
"""

import time
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ValidationError

from ..click_models.em import UBMEstimator, fit_dcm_satisfaction
from ..click_models.session_log import read_sessions
from ..core.alpha import regret_bound
from ..core.exceptions import BanditError
from ..core.models import AlphaParams, PositionWeights
from ..offline_eval.models import ReplayDataset, ReplayGroup
from ..offline_eval.metrics import CTRTracker
from ..offline_eval.replay import ContextFn, one_hot_contexts, replay_evaluate
from ..policies.base import Policy, PolicyTag
from ..policies.factory import make_policy, parse_tag
from ..policies.linucb import ContextualPolicy
from ..policies.snapshot import save_snapshot
from ..synthetic_env.features import FeatureFactorization
from ..synthetic_env.world import GroundTruthWorld
from ..utils.logger import get_logger
from ..utils.rng import substream
from .config import ExperimentConfig, ExperimentMode, WeightSourceKind
from .pool import run_tasks
from .report import Checkpoint, RunReport, checkpoint_schedule, write_reports

logger = get_logger(__name__)


class RunTask(BaseModel):
    """One unit of work"""

    config: ExperimentConfig
    K: int
    algorithm: PolicyTag
    seed: int


@lru_cache(maxsize=4)
def _sessions(path: str) -> tuple:
    return tuple(read_sessions(path))


@lru_cache(maxsize=4)
def _fitted_weights(
    path: str, K: int, per_user: bool, tolerance: float, max_iterations: int
) -> PositionWeights:
    sessions = list(_sessions(path))
    K = max(K, max(s.K for s in sessions))
    estimator = UBMEstimator(K, max_iterations=max_iterations, tolerance=tolerance, per_user=per_user)
    return estimator.fit(sessions).weights


def resolve_weights(config: ExperimentConfig) -> PositionWeights:
    """
    Position weights covering the largest K of the experiment

    Args:
        config: Validated configuration

    Returns:
        Geometric weights, the weights file, or an EM fit on ``replay.log``
    """
    K = config.max_K
    source = config.weights
    if source.source is WeightSourceKind.GEOMETRIC:
        return PositionWeights.geometric(K, source.decay)
    if source.source is WeightSourceKind.FILE:
        weights = PositionWeights.load(source.path)
    else:
        tol = config.tolerances
        weights = _fitted_weights(
            str(config.replay.log), K, source.per_user, tol.em_tolerance, tol.em_max_iterations
        )
    if weights.K < K:
        raise BanditError(f"weights cover {weights.K} positions, experiment needs {K}")
    return weights


def bound_params(weights: PositionWeights, d: int, K: int, T: int, beta: Optional[float]) -> AlphaParams:
    """Constants of the regret bound of UBM-LinUCB for one K."""
    m = weights.matrix
    phi = float(sum(m[k, k] ** 2 for k in range(K)))
    return AlphaParams.for_phi(d, phi, K, T, beta)


def _build_policy(
    task: RunTask,
    d: int,
    weights: PositionWeights,
    horizon: int,
    beta: Optional[float] = None,
    satisfaction: Optional[Sequence[float]] = None,
) -> Policy:
    policy = make_policy(
        task.algorithm, d, task.K, weights, horizon=horizon, beta=beta, satisfaction=satisfaction
    )
    if isinstance(policy, ContextualPolicy):
        policy.ridge.refactor_every = task.config.tolerances.ridge_refactor_every
    return policy


def run_synthetic(task: RunTask, weights: PositionWeights) -> RunReport:
    """Play one policy against the seed's world for T rounds."""
    config = task.config
    world = GroundTruthWorld.generate(
        config.d,
        config.m,
        weights,
        seed=substream(config.master_seed, "world", task.seed),
        beta=config.beta,
        horizon=config.T,
        click_model=config.click_model,
        gamma_range=(config.world.gamma_min, config.world.gamma_max),
        stratified=config.world.stratified,
    )
    policy = _build_policy(task, world.d, weights, config.T, world.beta)
    rng = substream(config.master_seed, task.algorithm.value, task.seed)
    params = bound_params(weights, world.d, task.K, config.T, world.beta)

    schedule = set(checkpoint_schedule(config.T))
    tracker = CTRTracker()
    regret = 0.0
    checkpoints = []
    for t in range(1, config.T + 1):
        outcome = world.run_round(policy, task.K, rng)
        tracker.add(outcome.clicks, int(any(outcome.clicks)))
        regret += outcome.regret
        if t in schedule:
            checkpoints.append(
                Checkpoint(
                    t=t,
                    ctr_sum=tracker.ctr_sum,
                    ctr_set=tracker.ctr_set,
                    regret=regret,
                    bound=regret_bound(params, t),
                    bound_no_constant=regret_bound(params, t, include_constant=False),
                )
            )
    report = RunReport(
        mode=config.mode.value,
        algorithm=task.algorithm.value,
        K=task.K,
        seed=task.seed,
        checkpoints=checkpoints,
    )
    return _maybe_snapshot(task, policy, report)


def replay_contexts(config: ExperimentConfig, dataset: ReplayDataset) -> Tuple[ContextFn, int]:
    """Context function and dimension used for replay runs."""
    if config.replay.features is None:
        return one_hot_contexts(dataset), len(dataset.items)
    fact = FeatureFactorization.load(config.replay.features)

    def context(group: ReplayGroup, arm: str):
        return fact.context_for(group.key, arm)

    return context, fact.dimension


def run_replay(task: RunTask, weights: PositionWeights) -> RunReport:
    """Replay one policy on the configured log."""
    config = task.config
    sessions = _sessions(str(config.replay.log))
    dataset = ReplayDataset.from_sessions(sessions, task.K, group_by=config.replay.group_by.value)
    context_fn, d = replay_contexts(config, dataset)
    rounds = config.replay.rounds or dataset.n_records
    satisfaction = None
    if task.algorithm is PolicyTag.DCM_LINUCB:
        satisfaction = fit_dcm_satisfaction(sessions, task.K)
        logger.info(f"DCM satisfaction fitted from the log: {satisfaction.round(4).tolist()}")
    policy = _build_policy(task, d, weights, rounds, satisfaction=satisfaction)
    result = replay_evaluate(
        policy,
        dataset,
        weights,
        K=task.K,
        seed=substream(config.master_seed, task.algorithm.value, task.seed),
        rounds=rounds,
        context_fn=context_fn,
    )
    trace = result.trace
    evaluated = trace[trace["F"].notna()]
    checkpoints = []
    for t in checkpoint_schedule(rounds):
        upto = evaluated[evaluated["round"] <= t]
        if upto.empty:
            continue
        last = upto.iloc[-1]
        checkpoints.append(Checkpoint(t=t, ctr_sum=float(last.cum_ctr_sum), ctr_set=float(last.cum_ctr_set)))
    run_dir = _run_dir(task)
    result.to_csv(run_dir / f"trace_{task.algorithm.value}_K{task.K}_seed{task.seed}.csv")
    report = RunReport(
        mode=config.mode.value,
        algorithm=task.algorithm.value,
        K=task.K,
        seed=task.seed,
        checkpoints=checkpoints,
        skipped=result.skipped,
    )
    return _maybe_snapshot(task, policy, report)


def _run_dir(task: RunTask) -> Path:
    path = Path(task.config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _maybe_snapshot(task: RunTask, policy: Policy, report: RunReport) -> RunReport:
    if not task.config.save_snapshots:
        return report
    path = _run_dir(task) / f"policy_{task.algorithm.value}_K{task.K}_seed{task.seed}.json"
    save_snapshot(policy, path)
    report.snapshot_path = str(path)
    return report


def execute_task(task: RunTask) -> RunReport:
    """
    Run one task, turning failures into an error report

    Module-level so worker processes can unpickle it.
    """
    started = time.perf_counter()
    label = f"{task.algorithm.value} K={task.K} seed={task.seed}"
    logger.info(f"Run {label} started")
    try:
        weights = resolve_weights(task.config)
        if task.config.mode is ExperimentMode.REPLAY:
            report = run_replay(task, weights)
        else:
            report = run_synthetic(task, weights)
    except (BanditError, ValidationError) as e:
        logger.error(f"Run {label} failed: {e}")
        report = RunReport(
            mode=task.config.mode.value,
            algorithm=task.algorithm.value,
            K=task.K,
            seed=task.seed,
            error=str(e),
        )
    report.wall_clock_seconds = time.perf_counter() - started
    logger.info(f"Run {label} finished in {report.wall_clock_seconds:.1f}s")
    return report


def build_tasks(config: ExperimentConfig) -> List[RunTask]:
    """Tasks ordered by K, then algorithm, then seed."""
    return [
        RunTask(config=config, K=K, algorithm=tag, seed=seed)
        for K in config.Ks
        for tag in config.policy_tags
        for seed in config.seeds
    ]


def run_experiment(config: ExperimentConfig, write: bool = True) -> List[RunReport]:
    """
    Execute every (K, algorithm, seed) run of an experiment

    Args:
        config: Validated configuration in synthetic or replay mode
        write: Emit runs.csv, summary.csv, runs.json and lift.csv under
            ``config.output_dir``

    Returns:
        One RunReport per task in task order; failed runs carry ``error``
    """
    if config.mode not in (ExperimentMode.SYNTHETIC, ExperimentMode.REPLAY):
        raise BanditError(f"mode {config.mode.value} is not an experiment mode")
    tasks = build_tasks(config)
    logger.info(
        f"Starting {config.mode.value} experiment: {len(tasks)} runs, "
        f"K={config.Ks}, algorithms={[t.value for t in config.policy_tags]}"
    )
    reports = run_tasks(execute_task, tasks, config.threads)
    failed = [r for r in reports if not r.ok]
    if failed:
        logger.error(f"{len(failed)} of {len(reports)} runs failed")
    if write:
        write_reports(reports, config.output_dir, baseline=parse_tag(config.baseline).value)
    return reports
