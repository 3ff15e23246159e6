"""
Model hyper-parameters.
"""
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict

from ..exceptions import ConfigError

INIT_SCHEMES = ("scaled", "unit")


@dataclass
class ModelConfig:
    """Shape of one encoder-decoder; the judger reuses the generator's config."""
    vocab_src: int = 4
    vocab_tgt: int = 4
    embed_dim: int = 64
    hidden_dim: int = 128
    output_dim: int = 128
    max_src_len: int = 64
    max_tgt_len: int = 100
    attention: bool = True
    # "unit": every parameter N(0, 1). "scaled": weights N(0, init_scale^2), biases 0.
    init_scheme: str = "scaled"
    init_scale: float = 0.1

    def validate(self, prefix: str = "model") -> "ModelConfig":
        for name in ("vocab_src", "vocab_tgt", "embed_dim", "hidden_dim", "output_dim",
                     "max_src_len", "max_tgt_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{prefix}.{name}", f"must be an integer >= 1, got {value!r}")
        if self.init_scheme not in INIT_SCHEMES:
            raise ConfigError(f"{prefix}.init_scheme", f"must be one of {INIT_SCHEMES}")
        if self.init_scale <= 0:
            raise ConfigError(f"{prefix}.init_scale", "must be positive")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "model") -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"{prefix}.{key}", "unknown field")
        return cls(**data).validate(prefix)
