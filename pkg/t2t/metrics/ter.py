"""
Translation edit rate with greedy block shifts.

Edits are insertions, deletions, substitutions and shifts of a contiguous
block of hypothesis words, each costing 1. A block may only be shifted onto
a reference span holding the same words, and only if it is not already
aligned in place. Shifts are searched greedily: the shift that lowers the
edit distance most is applied while it saves more than its own cost.
"""
from typing import List, Optional, Sequence, Tuple

from nltk.metrics.distance import edit_distance as _levenshtein

from ..exceptions import MetricError

MAX_SHIFT_SIZE = 10

Tokens = Sequence[str]


def edit_distance(hyp: Tokens, ref: Tokens) -> int:
    """Word-level Levenshtein distance."""
    return int(_levenshtein(list(hyp), list(ref)))


def _occurs(block: Tuple[str, ...], ref: Tokens) -> bool:
    k = len(block)
    return any(tuple(ref[j:j + k]) == block for j in range(len(ref) - k + 1))


def candidate_shifts(hyp: Tokens, ref: Tokens, max_size: int = MAX_SHIFT_SIZE):
    """Every ``(start, size, dest)`` move that lands a block on a matching reference span.

    ``dest`` indexes the hypothesis with the block removed, which is also the
    block's position after the move; ``ref[dest:dest + size]`` equals the
    block. Blocks that already match the reference in place are not moved.
    """
    n = len(hyp)
    for start in range(n):
        for size in range(1, min(max_size, n - start) + 1):
            block = tuple(hyp[start:start + size])
            if not _occurs(block, ref):
                break
            if tuple(ref[start:start + size]) == block:
                continue
            for dest in range(min(len(ref), n) - size + 1):
                if tuple(ref[dest:dest + size]) == block:
                    yield start, size, dest


def apply_shift(hyp: Tokens, start: int, size: int, dest: int) -> List[str]:
    block = list(hyp[start:start + size])
    rest = list(hyp[:start]) + list(hyp[start + size:])
    return rest[:dest] + block + rest[dest:]


def ter_edits(hyp: Tokens, ref: Tokens) -> Tuple[int, int]:
    """Greedy TER; returns ``(shifts, edit distance after shifting)``."""
    current = list(hyp)
    shifts = 0
    distance = edit_distance(current, ref)
    while distance > 0:
        best: Optional[Tuple[int, List[str]]] = None
        for start, size, dest in candidate_shifts(current, ref):
            moved = apply_shift(current, start, size, dest)
            d = edit_distance(moved, ref)
            if best is None or d < best[0]:
                best = (d, moved)
        if best is None or best[0] + 1 >= distance:
            break
        distance, current = best
        shifts += 1
    return shifts, distance


def ter(candidate: Tokens, reference: Tokens) -> float:
    """``(shifts + edits) / |reference|``; can exceed 1."""
    if not reference:
        raise MetricError("TER needs a non-empty reference")
    shifts, distance = ter_edits(candidate, reference)
    return (shifts + distance) / len(reference)


def corpus_ter(candidates: Sequence[Tokens], references: Sequence[Tokens]) -> float:
    """Total edits over total reference length."""
    if len(candidates) != len(references):
        raise MetricError(f"{len(candidates)} candidates for {len(references)} references")
    if not candidates:
        raise MetricError("empty corpus")
    edits = words = 0
    for cand, ref in zip(candidates, references):
        if not ref:
            raise MetricError("TER needs a non-empty reference")
        shifts, distance = ter_edits(cand, ref)
        edits += shifts + distance
        words += len(ref)
    return edits / words
