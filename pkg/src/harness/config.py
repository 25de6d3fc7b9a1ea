"""
Experiment configuration

An experiment is described by one TOML file validated into
``ExperimentConfig``. Field-level problems are all reported together;
cross-field checks (K <= m, files exist, known algorithms) run afterwards
and are likewise collected before raising.
"""

import tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import tomli_w
from pydantic import BaseModel, Field, ValidationError

from config.settings import settings
from ..click_models.models import ClickModelType
from ..core.exceptions import ConfigValidationError, InvalidArgumentError
from ..offline_eval.models import GroupBy
from ..policies.base import PolicyTag
from ..policies.factory import parse_tag
from ..utils.logger import get_logger

logger = get_logger(__name__)


class ExperimentMode(str, Enum):
    SYNTHETIC = "synthetic"
    REPLAY = "replay"
    FIT_WEIGHTS = "fit-weights"
    SVD_FEATURES = "svd-features"


class WeightSourceKind(str, Enum):
    GEOMETRIC = "geometric"
    FILE = "file"
    EM = "em"


class WeightSource(BaseModel):
    """Where position weights come from"""

    source: WeightSourceKind = Field(default=WeightSourceKind.GEOMETRIC)
    decay: float = Field(default=0.9, gt=0.0, le=1.0, description="Geometric decay factor")
    path: Optional[Path] = Field(default=None, description="Weights JSON when source is 'file'")
    per_user: bool = Field(default=False, description="EM fits gamma per (user, item)")


class WorldSection(BaseModel):
    """How synthetic worlds draw arm attractiveness"""

    gamma_min: float = Field(default=0.05, ge=0.0, le=1.0)
    gamma_max: float = Field(default=0.95, ge=0.0, le=1.0)
    stratified: bool = Field(default=False, description="Even gamma grid shared by every seed")


class ReplaySection(BaseModel):
    log: Optional[Path] = Field(default=None, description="Canonical TSV session log")
    group_by: GroupBy = Field(default=GroupBy.DISPLAYED)
    rounds: Optional[int] = Field(default=None, ge=1, description="Replay rounds, defaults to the log size")
    features: Optional[Path] = Field(default=None, description="fact.bin for [U(i), V(j)] contexts")


class SVDSection(BaseModel):
    rank: int = Field(default_factory=lambda: settings.svd_rank, ge=1)
    oversampling: int = Field(default_factory=lambda: settings.svd_oversampling, ge=0)
    power_iterations: int = Field(default_factory=lambda: settings.svd_power_iterations, ge=0)


class Tolerances(BaseModel):
    em_tolerance: float = Field(default_factory=lambda: settings.em_tolerance, gt=0.0)
    em_max_iterations: int = Field(default_factory=lambda: settings.em_max_iterations, ge=1)
    ridge_refactor_every: int = Field(default_factory=lambda: settings.ridge_refactor_every, ge=1)


class ExperimentConfig(BaseModel):
    """Validated experiment description"""

    mode: ExperimentMode = Field(default=ExperimentMode.SYNTHETIC)
    algorithms: List[str] = Field(
        default_factory=lambda: [PolicyTag.UBM_LINUCB.value, PolicyTag.C2UCB.value], min_length=1
    )
    baseline: str = Field(default=PolicyTag.C2UCB.value, description="Reference of the lift table")
    K: Union[int, List[int]] = Field(default=3, description="List length, or several for a sweep")
    m: int = Field(default=20, ge=1, description="Arms per round in synthetic mode")
    d: int = Field(default=5, ge=1, description="Context dimension in synthetic mode")
    T: int = Field(default=10000, ge=1, description="Rounds per synthetic run")
    beta: Optional[float] = Field(default=None, gt=0.0, description="Norm bound on theta*, defaults to d")
    click_model: ClickModelType = Field(default=ClickModelType.UBM)
    weights: WeightSource = Field(default_factory=WeightSource)
    world: WorldSection = Field(default_factory=WorldSection)
    seeds: List[int] = Field(
        default_factory=lambda: list(range(settings.default_seed_count)), min_length=1
    )
    master_seed: int = Field(default_factory=lambda: settings.master_seed)
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    output_dir: Path = Field(default_factory=lambda: settings.output_dir)
    save_snapshots: bool = Field(default=False, description="Write each final policy snapshot")
    replay: ReplaySection = Field(default_factory=ReplaySection)
    svd: SVDSection = Field(default_factory=SVDSection)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @property
    def Ks(self) -> List[int]:
        return [self.K] if isinstance(self.K, int) else list(self.K)

    @property
    def max_K(self) -> int:
        return max(self.Ks)

    @property
    def policy_tags(self) -> List[PolicyTag]:
        return [parse_tag(a) for a in self.algorithms]

    def semantic_errors(self) -> List[str]:
        """Cross-field problems; empty when the config is usable."""
        errors = []
        if not self.Ks:
            errors.append("K: at least one list length is required")
        for K in self.Ks:
            if K < 1:
                errors.append(f"K: list length must be positive, got {K}")
            elif self.mode is ExperimentMode.SYNTHETIC and K > self.m:
                errors.append(f"K: K={K} exceeds the number of arms m={self.m}")
        for name in self.algorithms + [self.baseline]:
            try:
                parse_tag(name)
            except InvalidArgumentError as e:
                errors.append(f"algorithms: {e}")
        if PolicyTag.FIXED.value in [a.lower() for a in self.algorithms]:
            errors.append("algorithms: the fixed policy is not runnable from a config")
        if len(set(self.seeds)) != len(self.seeds):
            errors.append("seeds: seed values must be distinct")
        if self.world.gamma_min >= self.world.gamma_max:
            errors.append("world.gamma_min: must be below world.gamma_max")

        source = self.weights.source
        if source is WeightSourceKind.FILE:
            if self.weights.path is None:
                errors.append("weights.path: required when weights.source is 'file'")
            elif not Path(self.weights.path).is_file():
                errors.append(f"weights.path: file {self.weights.path} does not exist")
        if source is WeightSourceKind.EM or self.mode in (
            ExperimentMode.REPLAY,
            ExperimentMode.FIT_WEIGHTS,
            ExperimentMode.SVD_FEATURES,
        ):
            if self.replay.log is None:
                errors.append("replay.log: a session log is required for this mode or weight source")
            elif not Path(self.replay.log).is_file():
                errors.append(f"replay.log: file {self.replay.log} does not exist")
        if self.replay.features is not None:
            if not Path(self.replay.features).is_file():
                errors.append(f"replay.features: file {self.replay.features} does not exist")
            if self.replay.group_by is not GroupBy.USER:
                errors.append("replay.features: factorized contexts need replay.group_by = 'user'")
        return errors

    def to_toml_dict(self) -> Dict[str, Any]:
        """Plain-data form suitable for TOML (no None values, paths as strings)."""
        return _strip_none(self.model_dump(mode="json"))


def _strip_none(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _strip_none(v) for k, v in value.items() if v is not None}
    if isinstance(value, list):
        return [_strip_none(v) for v in value]
    return value


def merge_overrides(raw: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Overlay non-None override values onto raw config data, merging nested tables."""
    merged = dict(raw)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_overrides(merged[key], value)
        else:
            merged[key] = value
    return merged


def _format_error(error: Dict[str, Any]) -> str:
    location = ".".join(str(part) for part in error["loc"]) or "config"
    return f"{location}: {error['msg']}"


def validate_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate raw configuration data

    Args:
        raw: Parsed TOML document or overrides

    Returns:
        ExperimentConfig

    Raises:
        ConfigValidationError: Listing every violated field
    """
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigValidationError([_format_error(err) for err in e.errors()]) from None
    errors = config.semantic_errors()
    if errors:
        raise ConfigValidationError(errors)
    return config


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Read and validate an experiment TOML file

    Args:
        path: TOML file
        overrides: Top-level keys replacing the file's values (CLI flags)

    Returns:
        ExperimentConfig
    """
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigValidationError([f"config: file {path} does not exist"]) from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigValidationError([f"config: {path} is not valid TOML ({e})"]) from None
    raw = merge_overrides(raw, overrides or {})
    config = validate_config(raw)
    logger.info(f"Loaded {config.mode.value} experiment config from {path}")
    return config


def dump_defaults() -> str:
    """TOML text of the default configuration."""
    return tomli_w.dumps(ExperimentConfig().to_toml_dict())
