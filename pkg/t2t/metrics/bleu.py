"""
Corpus-level BLEU: clipped n-gram counts pooled over the corpus, with nltk's
n-gram extraction and brevity penalty.
"""
import math
from collections import Counter
from typing import List, Sequence, Tuple, Union

from nltk.translate.bleu_score import brevity_penalty, closest_ref_length
from nltk.util import ngrams

from ..exceptions import MetricError

Tokens = Sequence[str]


def _references(refs: Union[Tokens, Sequence[Tokens]]) -> List[Tokens]:
    """Accept one token list or a list of alternative token lists."""
    if refs and not isinstance(refs[0], str):
        return list(refs)
    return [refs]


def modified_precision(candidate: Tokens, references: Union[Tokens, Sequence[Tokens]], n: int) -> Tuple[int, int]:
    """Clipped matches and the number of candidate n-grams of one sentence.

    A candidate shorter than ``n`` has no n-grams and gives ``(0, 0)``.
    """
    counts = Counter(ngrams(candidate, n))
    if not counts:
        return 0, 0
    ceiling: Counter = Counter()
    for ref in _references(references):
        ceiling |= Counter(ngrams(ref, n))
    matches = sum(min(c, ceiling[g]) for g, c in counts.items())
    return matches, sum(counts.values())


def bleu_n(candidates: Sequence[Tokens], references: Sequence[Union[Tokens, Sequence[Tokens]]],
           n: int = 4, smoothing: bool = True) -> float:
    """Corpus BLEU-n in [0, 100].

    With ``smoothing`` an order ``k >= 2`` with zero matches uses
    ``(matches + 1) / (total + 1)``.
    """
    if len(candidates) != len(references):
        raise MetricError(f"{len(candidates)} candidates for {len(references)} references")
    if not candidates:
        raise MetricError("empty corpus")
    if n < 1:
        raise MetricError("n must be >= 1")
    matches = [0] * n
    totals = [0] * n
    cand_len = ref_len = 0
    for cand, refs in zip(candidates, references):
        refs = _references(refs)
        cand_len += len(cand)
        ref_len += closest_ref_length(refs, len(cand))
        for k in range(1, n + 1):
            m, t = modified_precision(cand, refs, k)
            matches[k - 1] += m
            totals[k - 1] += t
    log_sum = 0.0
    for k in range(n):
        m, t = matches[k], totals[k]
        if smoothing and k >= 1 and m == 0:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        log_sum += math.log(m / t)
    return 100.0 * brevity_penalty(ref_len, cand_len) * math.exp(log_sum / n)
