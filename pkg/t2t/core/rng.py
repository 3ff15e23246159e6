"""
Named random sub-streams derived from a single run seed.
"""
import zlib
from typing import Any, Dict

import numpy as np

STREAMS = ("init", "judger-init", "data-shuffle", "sampling", "augment", "eval")


def stream_seed(seed: int, name: str) -> list:
    return [int(seed), zlib.crc32(name.encode("utf-8"))]


class RandomStreams:
    """One ``numpy.random.Generator`` per stream name, created on first use."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: Dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = np.random.default_rng(stream_seed(self.seed, name))
        return self._streams[name]

    __getitem__ = get

    def state(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "streams": {name: gen.bit_generator.state for name, gen in self._streams.items()},
        }

    def restore(self, state: Dict[str, Any]) -> None:
        """Reset existing generators in place so holders of them see the restored state."""
        if int(state["seed"]) != self.seed:
            raise ValueError(f"stream state was saved for seed {state['seed']}, not {self.seed}")
        for name, bit_state in state.get("streams", {}).items():
            self.get(name).bit_generator.state = bit_state

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "RandomStreams":
        streams = cls(state["seed"])
        streams.restore(state)
        return streams
