"""
Shuffled minibatch iteration with a serializable position.
"""
from typing import Any, Dict, List

import numpy as np

from ..exceptions import DatasetError


class BatchSampler:
    """Yields index batches from per-epoch permutations of ``range(size)``.

    The final short batch of an epoch is dropped when ``drop_last`` is set.
    """

    def __init__(self, size: int, batch_size: int, rng: np.random.Generator, drop_last: bool = False):
        if size < 1:
            raise DatasetError("cannot sample batches from an empty dataset")
        self.size = size
        self.batch_size = min(batch_size, size)
        self.rng = rng
        self.drop_last = drop_last
        self.epoch = 0
        self.pos = 0
        self.perm = rng.permutation(size)

    @property
    def batches_per_epoch(self) -> int:
        full, rest = divmod(self.size, self.batch_size)
        return full + (1 if rest and not self.drop_last else 0)

    def next(self) -> List[int]:
        remaining = self.size - self.pos
        if remaining <= 0 or (self.drop_last and remaining < self.batch_size):
            self.epoch += 1
            self.pos = 0
            self.perm = self.rng.permutation(self.size)
        rows = self.perm[self.pos:self.pos + self.batch_size]
        self.pos += len(rows)
        return [int(r) for r in rows]

    def epoch_batches(self) -> List[List[int]]:
        """The batches of one full pass, starting a fresh epoch if one is in progress."""
        if self.pos:
            self.epoch += 1
            self.pos = 0
            self.perm = self.rng.permutation(self.size)
        return [self.next() for _ in range(self.batches_per_epoch)]

    def state(self) -> Dict[str, Any]:
        return {"epoch": self.epoch, "pos": self.pos, "perm": self.perm.tolist()}

    def restore(self, state: Dict[str, Any]) -> None:
        self.epoch = int(state["epoch"])
        self.pos = int(state["pos"])
        self.perm = np.asarray(state["perm"], dtype=np.int64)
