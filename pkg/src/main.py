"""
Command-line entry point

    ubm-bandit fit-weights log.tsv --k 5 -o weights.json
    ubm-bandit svd-features log.tsv --rank 10 -o fact.bin
    ubm-bandit simulate --config exp.toml
    ubm-bandit replay --config exp.toml --log log.tsv --weights weights.json
    ubm-bandit report runs/
    ubm-bandit --dump-defaults
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .click_models.em import UBMEstimator
from .click_models.models import SessionRecord
from .click_models.session_log import read_sessions, read_yandex_log
from .core.exceptions import BanditError
from .core.models import PositionWeights
from .harness.config import ExperimentMode, dump_defaults, load_config
from .harness.report import compare_table, load_reports, summarize, write_reports
from .harness.runner import run_experiment
from .synthetic_env.features import build_attractiveness_matrix, truncated_svd
from .utils.logger import get_logger
from config.settings import settings

logger = get_logger(__name__)


def _read_log(path: Path, log_format: str, K: Optional[int]) -> List[SessionRecord]:
    if log_format == "yandex":
        with open(path, "r", encoding="utf-8") as f:
            sessions = list(read_yandex_log(f, K=K or 10))
        logger.info(f"Read {len(sessions)} result pages from {path}")
        return sessions
    return read_sessions(path)


def _truncate(session: SessionRecord, K: int) -> SessionRecord:
    if session.K <= K:
        return session
    return SessionRecord(
        user_id=session.user_id, displayed=session.displayed[:K], clicks=session.clicks[:K]
    )


def _fit_weights(sessions: List[SessionRecord], K: int, per_user: bool) -> PositionWeights:
    estimator = UBMEstimator(K, per_user=per_user)
    fit = estimator.fit([_truncate(s, K) for s in sessions])
    weights, attractiveness, log_likelihood = fit.as_tuple()
    print(
        f"UBM fit: {fit.iterations} iterations, converged={fit.converged}, "
        f"{len(attractiveness)} attractiveness entries, log-likelihood={log_likelihood:.6f}"
    )
    return weights


def _output_path(args: argparse.Namespace) -> Path:
    """Output file, placed under --out when given as a relative path."""
    if args.out is not None and not args.output.is_absolute():
        return args.out / args.output
    return args.output


def cmd_fit_weights(args: argparse.Namespace) -> int:
    """Fit UBM position weights to a log and write the weights JSON."""
    sessions = _read_log(args.log, args.format, args.k)
    if not sessions:
        raise BanditError(f"no sessions in {args.log}")
    K = args.k or max(s.K for s in sessions)
    weights = _fit_weights(sessions, K, args.per_user)
    output = _output_path(args)
    output.parent.mkdir(parents=True, exist_ok=True)
    weights.save(output)
    print(f"Wrote K={weights.K} weights to {output}")
    return 0


def cmd_svd_features(args: argparse.Namespace) -> int:
    """Build the attractiveness matrix of a log and write its factorization."""
    sessions = _read_log(args.log, args.format, args.k)
    if not sessions:
        raise BanditError(f"no sessions in {args.log}")
    if args.weights:
        weights = PositionWeights.load(args.weights)
    else:
        weights = _fit_weights(sessions, max(s.K for s in sessions), per_user=False)
    matrix = build_attractiveness_matrix(sessions, weights, K=args.k)
    fact = truncated_svd(
        matrix.values,
        rank=args.rank,
        oversampling=args.oversampling,
        power_iterations=args.power_iterations,
        seed=args.seed if args.seed is not None else settings.master_seed,
    )
    fact.user_ids = matrix.user_ids
    fact.item_ids = matrix.item_ids
    output = _output_path(args)
    output.parent.mkdir(parents=True, exist_ok=True)
    fact.save(output)
    print(
        f"Wrote rank-{fact.rank} factorization of {len(matrix.user_ids)} users x "
        f"{len(matrix.item_ids)} items to {output}"
    )
    return 0


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {"master_seed": args.seed, "threads": args.threads, "output_dir": args.out}


def _run(config_path: Path, overrides: Dict[str, Any]) -> int:
    config = load_config(config_path, overrides)
    reports = run_experiment(config)
    failed = [r for r in reports if not r.ok]
    print(summarize(reports).to_string(index=False))
    print(f"\n{len(reports) - len(failed)} of {len(reports)} runs succeeded; results in {config.output_dir}")
    return 1 if failed else 0


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run a synthetic experiment."""
    overrides = _overrides(args)
    overrides["mode"] = ExperimentMode.SYNTHETIC.value
    return _run(args.config, overrides)


def cmd_replay(args: argparse.Namespace) -> int:
    """Run a replay experiment on a logged dataset."""
    overrides = _overrides(args)
    overrides["mode"] = ExperimentMode.REPLAY.value
    if args.log:
        overrides["replay"] = {"log": str(args.log)}
    if args.weights:
        overrides["weights"] = {"source": "file", "path": str(args.weights)}
    return _run(args.config, overrides)


def cmd_report(args: argparse.Namespace) -> int:
    """Print the summary and lift table of a finished experiment."""
    reports = load_reports(args.run_dir)
    print(summarize(reports).to_string(index=False))
    try:
        table = compare_table(reports, args.baseline)
    except BanditError as e:
        print(f"\nNo lift table: {e}")
    else:
        print()
        print(table.to_string(float_format=lambda v: f"{v:.4f}"))
    if args.rewrite:
        write_reports(reports, args.run_dir, baseline=args.baseline)
    return 0


def _add_shared_options(
    parser: argparse.ArgumentParser, default: Any, threads: bool = True
) -> argparse.ArgumentParser:
    parser.add_argument("--seed", type=int, default=default, help="master seed")
    if threads:
        parser.add_argument("--threads", type=int, default=default, help="worker processes")
    parser.add_argument("--out", type=Path, default=default, help="output directory")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ubm-bandit",
        description="UBM-LinUCB contextual ranking bandits: click-model fitting, simulation and replay",
    )
    _add_shared_options(parser, default=None)
    parser.add_argument("--dump-defaults", action="store_true", help="print the default experiment TOML")
    sub = parser.add_subparsers(dest="command")
    # Suppressed defaults keep values given before the subcommand
    file_options = _add_shared_options(
        argparse.ArgumentParser(add_help=False), default=argparse.SUPPRESS, threads=False
    )
    run_options = _add_shared_options(argparse.ArgumentParser(add_help=False), default=argparse.SUPPRESS)

    fit = sub.add_parser(
        "fit-weights", help="fit UBM position weights with EM", parents=[file_options]
    )
    fit.add_argument("log", type=Path)
    fit.add_argument("--k", type=int, default=None, help="list length (default: longest session)")
    fit.add_argument("-o", "--output", type=Path, default=Path("weights.json"))
    fit.add_argument("--per-user", action="store_true", help="fit attractiveness per (user, item)")
    fit.add_argument("--format", choices=["tsv", "yandex"], default="tsv")
    fit.set_defaults(handler=cmd_fit_weights)

    svd = sub.add_parser(
        "svd-features", help="factorize the user x item attractiveness matrix", parents=[file_options]
    )
    svd.add_argument("log", type=Path)
    svd.add_argument("--rank", type=int, default=settings.svd_rank)
    svd.add_argument("--oversampling", type=int, default=settings.svd_oversampling)
    svd.add_argument("--power-iterations", type=int, default=settings.svd_power_iterations)
    svd.add_argument("--weights", type=Path, default=None, help="weights JSON (default: fit with EM)")
    svd.add_argument("--k", type=int, default=None)
    svd.add_argument("-o", "--output", type=Path, default=Path("fact.bin"))
    svd.add_argument("--format", choices=["tsv", "yandex"], default="tsv")
    svd.set_defaults(handler=cmd_svd_features)

    sim = sub.add_parser("simulate", help="run a synthetic experiment", parents=[run_options])
    sim.add_argument("--config", type=Path, required=True)
    sim.set_defaults(handler=cmd_simulate)

    rep = sub.add_parser("replay", help="evaluate policies offline on a log", parents=[run_options])
    rep.add_argument("--config", type=Path, required=True)
    rep.add_argument("--log", type=Path, default=None)
    rep.add_argument("--weights", type=Path, default=None)
    rep.set_defaults(handler=cmd_replay)

    report = sub.add_parser("report", help="summarize a finished experiment")
    report.add_argument("run_dir", type=Path)
    report.add_argument("--baseline", default="C2UCB")
    report.add_argument("--rewrite", action="store_true", help="rewrite summary.csv and lift.csv")
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and dispatch; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_defaults:
        sys.stdout.write(dump_defaults())
        return 0
    if not getattr(args, "handler", None):
        parser.print_help()
        return 2
    try:
        return args.handler(args)
    except (BanditError, OSError, ValidationError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli()
