"""
Run configuration: one dataclass per section, merged into ``RunConfig``.

A run directory always holds the merged configuration as ``config.json``;
loading that file and rerunning reproduces the run.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Type, TypeVar, Union

from .core.storage import read_json, write_json
from .exceptions import CheckpointError, ConfigError
from .model.config import ModelConfig

logger = logging.getLogger(__name__)

GRAD_ESTIMATORS = ("sampled-token", "per-step-expected")
IKL_NORMALIZE = ("token", "sequence")
DECODE_MODES = ("greedy", "sample")

T = TypeVar("T")


def section_from_dict(cls: Type[T], data: Dict[str, Any], prefix: str) -> T:
    if not isinstance(data, dict):
        raise ConfigError(prefix, "must be a JSON object")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}", "unknown field")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(prefix, str(e))


def _positive_int(prefix: str, name: str, value: Any, minimum: int = 1) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{prefix}.{name}", f"must be an integer >= {minimum}, got {value!r}")


def _positive_float(prefix: str, name: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigError(f"{prefix}.{name}", f"must be a positive number, got {value!r}")


@dataclass
class TrainingConfig:
    """Algorithm hyper-parameters; defaults follow the reference setup (m = g = 1, Adam at 1e-3)."""
    m: int = 1
    g: int = 1
    lr: float = 0.001
    batch_size: int = 64
    pretrain_epochs: int = 2
    judger_pretrain_epochs: int = 0
    max_rounds: int = 2000
    seed: int = 0
    grad_estimator: str = "per-step-expected"
    ikl_normalize: str = "token"
    temperature: float = 1.0
    max_sample_len: Optional[int] = None
    patience: int = 10
    eval_every: int = 50
    checkpoint_every: int = 0

    def validate(self, prefix: str = "training") -> "TrainingConfig":
        _positive_int(prefix, "m", self.m)
        _positive_int(prefix, "g", self.g)
        _positive_int(prefix, "batch_size", self.batch_size)
        _positive_int(prefix, "pretrain_epochs", self.pretrain_epochs, 0)
        _positive_int(prefix, "judger_pretrain_epochs", self.judger_pretrain_epochs, 0)
        _positive_int(prefix, "max_rounds", self.max_rounds, 0)
        _positive_int(prefix, "seed", self.seed, 0)
        _positive_int(prefix, "patience", self.patience)
        _positive_int(prefix, "eval_every", self.eval_every)
        _positive_int(prefix, "checkpoint_every", self.checkpoint_every, 0)
        _positive_float(prefix, "lr", self.lr)
        _positive_float(prefix, "temperature", self.temperature)
        if self.max_sample_len is not None:
            _positive_int(prefix, "max_sample_len", self.max_sample_len)
        if self.grad_estimator not in GRAD_ESTIMATORS:
            raise ConfigError(f"{prefix}.grad_estimator", f"must be one of {GRAD_ESTIMATORS}")
        if self.ikl_normalize not in IKL_NORMALIZE:
            raise ConfigError(f"{prefix}.ikl_normalize", f"must be one of {IKL_NORMALIZE}")
        return self


@dataclass
class PipelineConfig:
    max_perms: int = 3
    min_freq: int = 1
    per_character: bool = False
    delexicalize: bool = True

    def validate(self, prefix: str = "pipeline") -> "PipelineConfig":
        _positive_int(prefix, "max_perms", self.max_perms)
        _positive_int(prefix, "min_freq", self.min_freq)
        return self


@dataclass
class PathsConfig:
    """Dataset files and where run directories are created."""
    train: Optional[str] = None
    valid: Optional[str] = None
    test: Optional[str] = None
    runs: str = "runs"
    eval_lm: Optional[str] = None

    def validate(self, prefix: str = "paths") -> "PathsConfig":
        if not self.runs:
            raise ConfigError(f"{prefix}.runs", "must not be empty")
        return self


@dataclass
class EvalConfig:
    decode: str = "greedy"
    temperature: float = 1.0
    seed: Optional[int] = None
    samples_per_context: int = 1
    eval_lm_embed_dim: int = 64
    eval_lm_hidden_dim: int = 300
    eval_lm_epochs: int = 5
    bleu_smoothing: bool = True

    def validate(self, prefix: str = "eval") -> "EvalConfig":
        if self.decode not in DECODE_MODES:
            raise ConfigError(f"{prefix}.decode", f"must be one of {DECODE_MODES}")
        _positive_float(prefix, "temperature", self.temperature)
        _positive_int(prefix, "samples_per_context", self.samples_per_context)
        _positive_int(prefix, "eval_lm_embed_dim", self.eval_lm_embed_dim)
        _positive_int(prefix, "eval_lm_hidden_dim", self.eval_lm_hidden_dim)
        _positive_int(prefix, "eval_lm_epochs", self.eval_lm_epochs, 0)
        if self.seed is not None:
            _positive_int(prefix, "seed", self.seed, 0)
        return self


SECTIONS = {
    "model": ModelConfig,
    "training": TrainingConfig,
    "pipeline": PipelineConfig,
    "paths": PathsConfig,
    "eval": EvalConfig,
}


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @property
    def seed(self) -> int:
        return self.training.seed

    def validate(self) -> "RunConfig":
        for name in SECTIONS:
            getattr(self, name).validate(name)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "must be a JSON object")
        for key in data:
            if key not in SECTIONS:
                raise ConfigError(key, "unknown section")
        parts = {name: section_from_dict(klass, data.get(name, {}), name) for name, klass in SECTIONS.items()}
        return cls(**parts).validate()

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        try:
            data = read_json(path)
        except CheckpointError as e:
            raise ConfigError("config", str(e))
        return cls.from_dict(data)

    def save(self, path: Union[str, Path]) -> None:
        write_json(path, self.to_dict(), pretty=True)


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config: RunConfig, assignments: Iterable[str]) -> RunConfig:
    """Apply ``section.field=value`` strings; values are parsed as JSON when possible."""
    data = config.to_dict()
    for item in assignments:
        key, sep, raw = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(key or item, "override must look like section.field=value")
        if section not in data:
            raise ConfigError(section, "unknown section")
        if name not in data[section]:
            raise ConfigError(key, "unknown field")
        data[section][name] = _parse_value(raw)
        logger.debug("Override %s = %r", key, data[section][name])
    return RunConfig.from_dict(data)
