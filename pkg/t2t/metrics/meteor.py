"""
METEOR restricted to exact unigram matching ("METEOR-exact").
"""
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from ..exceptions import MetricError

Tokens = Sequence[str]
SEARCH_LIMIT = 50000


@dataclass
class Alignment:
    pairs: List[Tuple[int, int]]
    chunks: int

    @property
    def matches(self) -> int:
        return len(self.pairs)


def count_chunks(pairs: Sequence[Tuple[int, int]]) -> int:
    """Runs of pairs adjacent in both sentences, taken in candidate order."""
    chunks = 0
    prev: Optional[Tuple[int, int]] = None
    for i, j in sorted(pairs):
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def max_matches(candidate: Tokens, reference: Tokens) -> int:
    c, r = Counter(candidate), Counter(reference)
    return sum(min(n, r[w]) for w, n in c.items())


def _greedy(candidate: Tokens, reference: Tokens) -> List[Tuple[int, int]]:
    used = set()
    pairs = []
    prev_j = None
    for i, w in enumerate(candidate):
        options = [j for j, r in enumerate(reference) if r == w and j not in used]
        if not options:
            prev_j = None
            continue
        j = prev_j + 1 if prev_j is not None and prev_j + 1 in options else options[0]
        used.add(j)
        pairs.append((i, j))
        prev_j = j
    return pairs


def align(candidate: Tokens, reference: Tokens, limit: int = SEARCH_LIMIT) -> Alignment:
    """Alignment with the most matches and, among those, the fewest chunks.

    Depth-first over candidate positions, preferring the reference position
    right after the previous match. The search stops after ``limit`` nodes and
    keeps the best alignment found.
    """
    target = max_matches(candidate, reference)
    seed = _greedy(candidate, reference)
    best = [count_chunks(seed) if len(seed) == target else None, seed]
    if target == 0:
        return Alignment([], 0)
    positions = {}
    for j, w in enumerate(reference):
        positions.setdefault(w, []).append(j)
    remaining_cand = Counter(candidate)
    free_ref = Counter(reference)
    used = [False] * len(reference)
    pairs: List[Tuple[int, int]] = []
    nodes = 0

    def bound() -> int:
        return sum(min(n, free_ref[w]) for w, n in remaining_cand.items() if n)

    def search(i: int, prev: Optional[Tuple[int, int]], chunks: int) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > limit:
            return
        if best[0] is not None and chunks >= best[0]:
            return
        if len(pairs) + bound() < target:
            return
        if i == len(candidate):
            if len(pairs) == target:
                best[0], best[1] = chunks, list(pairs)
            return
        w = candidate[i]
        remaining_cand[w] -= 1
        options = [j for j in positions.get(w, []) if not used[j]]
        if prev is not None and prev[0] == i - 1 and prev[1] + 1 in options:
            options.remove(prev[1] + 1)
            options.insert(0, prev[1] + 1)
        for j in options:
            extends = prev is not None and prev == (i - 1, j - 1)
            used[j] = True
            free_ref[w] -= 1
            pairs.append((i, j))
            search(i + 1, (i, j), chunks + (0 if extends else 1))
            pairs.pop()
            free_ref[w] += 1
            used[j] = False
        search(i + 1, prev, chunks)
        remaining_cand[w] += 1

    search(0, None, 0)
    found = best[1]
    return Alignment(sorted(found), count_chunks(found))


def meteor_exact(candidate: Tokens, reference: Tokens) -> float:
    """``Fmean * (1 - 0.5 * (chunks / matches) ** 3)`` with ``Fmean = 10PR / (R + 9P)``."""
    if not reference:
        raise MetricError("METEOR needs a non-empty reference")
    alignment = align(candidate, reference)
    m = alignment.matches
    if m == 0:
        return 0.0
    precision = m / len(candidate)
    recall = m / len(reference)
    fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (alignment.chunks / m) ** 3
    return fmean * (1.0 - penalty)


def corpus_meteor(candidates: Sequence[Tokens], references: Sequence[Tokens]) -> float:
    """Mean sentence-level score."""
    if len(candidates) != len(references):
        raise MetricError(f"{len(candidates)} candidates for {len(references)} references")
    if not candidates:
        raise MetricError("empty corpus")
    return sum(meteor_exact(c, r) for c, r in zip(candidates, references)) / len(candidates)
