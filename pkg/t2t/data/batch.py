"""
Padded id batches shared by models, objectives and metrics.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>")


@dataclass
class Batch:
    """Right-padded source/target ids with 1.0/0.0 masks."""
    src: np.ndarray
    src_mask: np.ndarray
    tgt: Optional[np.ndarray] = None
    tgt_mask: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.src.shape[0])

    def target_lengths(self) -> np.ndarray:
        return self.tgt_mask.sum(axis=1)

    def with_target(self, seqs: Sequence[Sequence[int]]) -> "Batch":
        tgt, tgt_mask = pad_sequences(seqs)
        return Batch(self.src, self.src_mask, tgt, tgt_mask)

    def select(self, rows: Sequence[int]) -> "Batch":
        rows = np.asarray(rows, dtype=np.int64)
        return Batch(
            self.src[rows],
            self.src_mask[rows],
            None if self.tgt is None else self.tgt[rows],
            None if self.tgt_mask is None else self.tgt_mask[rows],
        )


def pad_sequences(seqs: Sequence[Sequence[int]], pad: int = PAD, width: Optional[int] = None):
    """Stack variable-length id lists into ``(ids, mask)`` of the batch max length."""
    width = max((len(s) for s in seqs), default=0) if width is None else width
    ids = np.full((len(seqs), width), pad, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=np.float64)
    for row, seq in enumerate(seqs):
        n = min(len(seq), width)
        ids[row, :n] = seq[:n]
        mask[row, :n] = 1.0
    return ids, mask


def collate(sources: Sequence[Sequence[int]], targets: Optional[Sequence[Sequence[int]]] = None) -> Batch:
    src, src_mask = pad_sequences(sources)
    if targets is None:
        return Batch(src, src_mask)
    tgt, tgt_mask = pad_sequences(targets)
    return Batch(src, src_mask, tgt, tgt_mask)
