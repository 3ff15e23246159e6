"""
Named parameter tensors, their gradient accumulators and Adam state.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from ..exceptions import CheckpointError, NumericalError, ShapeError
from .storage import atomic_write_text, dump_json, read_json
from .tensor import Tensor

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "t2t-ckpt-v1"


@dataclass
class AdamState:
    """First/second moments and step count of one parameter."""
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, shape: Tuple[int, ...]) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape))


class Parameter:
    """A value array, its gradient accumulator and its optimizer state."""

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.adam = AdamState.zeros(self.value.shape)
        self._tensor: Optional[Tensor] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def tensor(self) -> Tensor:
        """The leaf tensor bound to this entry; rebuilt after every update."""
        if self._tensor is None:
            self._tensor = Tensor(self.value, param=self)
        return self._tensor

    def assign(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self.value.shape:
            raise ShapeError(f"{self.name}: cannot assign shape {value.shape} to {self.value.shape}")
        self.value = value.copy()
        self._tensor = None

    def accumulate(self, g: np.ndarray) -> None:
        self.grad += g


class ParameterStore:
    """Ordered map of uniquely named parameters."""

    def __init__(self, role: str = "model"):
        self.role = role
        self.entries: Dict[str, Parameter] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.entries:
            raise ShapeError(f"parameter '{name}' already registered")
        self.entries[name] = Parameter(name, value)
        return self.entries[name].tensor()

    def __getitem__(self, name: str) -> Tensor:
        return self.entries[name].tensor()

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def names(self) -> List[str]:
        return list(self.entries)

    def value(self, name: str) -> np.ndarray:
        return self.entries[name].value

    def grad(self, name: str) -> np.ndarray:
        return self.entries[name].grad

    def assign(self, name: str, value: np.ndarray) -> None:
        self.entries[name].assign(value)

    def zero_grad(self) -> None:
        for p in self:
            p.grad[...] = 0.0

    def num_scalars(self) -> int:
        return sum(p.value.size for p in self)

    def copy_from(self, other: "ParameterStore") -> None:
        """Copy values of ``other`` into identically named entries."""
        if other.names() != self.names():
            raise ShapeError("parameter stores have different layouts")
        for p in self:
            p.assign(other.value(p.name))

    # -- serialization ------------------------------------------------------

    def to_dict(self, meta: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "format": CHECKPOINT_FORMAT,
            "params": {
                p.name: {"shape": list(p.shape), "data": p.value.reshape(-1).tolist()}
                for p in self
            },
            "adam": {
                p.name: {
                    "t": p.adam.t,
                    "m": p.adam.m.reshape(-1).tolist(),
                    "v": p.adam.v.reshape(-1).tolist(),
                }
                for p in self
            },
            "step": self.step,
        }
        if meta is not None:
            doc["meta"] = meta
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any], role: str = "model") -> "ParameterStore":
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError(f"unsupported checkpoint format {doc.get('format')!r}")
        store = cls(role=(doc.get("meta") or {}).get("role", role))
        try:
            for name, entry in doc["params"].items():
                shape = tuple(entry["shape"])
                value = np.array(entry["data"], dtype=np.float64).reshape(shape)
                store.add(name, value)
                adam = doc.get("adam", {}).get(name)
                if adam is not None:
                    p = store.entries[name]
                    p.adam.t = int(adam["t"])
                    p.adam.m = np.array(adam["m"], dtype=np.float64).reshape(shape)
                    p.adam.v = np.array(adam["v"], dtype=np.float64).reshape(shape)
            store.step = int(doc.get("step", 0))
        except (KeyError, ValueError, TypeError) as e:
            raise CheckpointError(f"malformed checkpoint: {e}")
        return store

    def dumps(self, meta: Optional[Dict[str, Any]] = None) -> str:
        return dump_json(self.to_dict(meta))

    def save(self, path: Union[str, Path], meta: Optional[Dict[str, Any]] = None) -> None:
        atomic_write_text(path, self.dumps(meta))
        logger.info("Saved %s checkpoint (%d tensors) to %s", self.role, len(self), path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ParameterStore":
        return cls.from_dict(read_json(path))


def adam_step(store: ParameterStore, lr: float) -> ParameterStore:
    """One bias-corrected Adam update over every entry; gradients are zeroed."""
    for p in store:
        if not np.all(np.isfinite(p.grad)):
            raise NumericalError(f"non-finite gradient in '{p.name}', step aborted")
    for p in store:
        a = p.adam
        a.t += 1
        a.m = a.beta1 * a.m + (1.0 - a.beta1) * p.grad
        a.v = a.beta2 * a.v + (1.0 - a.beta2) * p.grad * p.grad
        m_hat = a.m / (1.0 - a.beta1 ** a.t)
        v_hat = a.v / (1.0 - a.beta2 ** a.t)
        p.value = p.value - lr * m_hat / (np.sqrt(v_hat) + a.eps)
        p._tensor = None
        p.grad = np.zeros_like(p.value)
    store.step += 1
    return store


def gaussian_init(rng: np.random.Generator, shape: Tuple[int, ...], std: float) -> np.ndarray:
    """N(0, std^2) initial values."""
    return rng.standard_normal(shape) * std
