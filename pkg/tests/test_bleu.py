import math
import random

import pytest

from t2t.exceptions import MetricError
from t2t.metrics.bleu import bleu_n, modified_precision


def test_clipped_unigram_precision():
    candidate = "the the the the the the the".split()
    reference = "the cat is on the mat".split()
    assert modified_precision(candidate, reference, 1) == (2, 7)


def test_clipping_uses_the_most_generous_reference():
    candidate = "the the the".split()
    refs = ["the cat".split(), "the the dog".split()]
    assert modified_precision(candidate, refs, 1) == (2, 3)


def test_identical_sentences_score_100():
    s = "bill gates founded microsoft in 1975 .".split()
    assert bleu_n([s], [s], 4) == pytest.approx(100.0)
    assert bleu_n([s], [s], 3) == pytest.approx(100.0)


def test_no_overlap_scores_zero():
    assert bleu_n([["a", "b", "c", "d"]], [["w", "x", "y", "z"]], 4) == 0.0


def test_brevity_penalty():
    ref = "a b c d e f g h".split()
    cand = "a b c d".split()
    # every n-gram matches, so only the brevity penalty exp(1 - 8/4) remains
    assert bleu_n([cand], [ref], 4) == pytest.approx(100.0 * 0.36787944117144233)


def test_smoothing_only_rescues_higher_orders():
    cand, ref = "a b x c".split(), "a b y c".split()
    assert bleu_n([cand], [ref], 4, smoothing=False) == 0.0
    assert bleu_n([cand], [ref], 4, smoothing=True) > 0.0


def test_corpus_statistics_are_pooled():
    cands = ["a b c d".split(), "e f g h".split()]
    refs = ["a b c d".split(), "e f g z".split()]
    expected = 100.0 * ((7 / 8) * (5 / 6) * (3 / 4) * (1 / 2)) ** 0.25
    assert bleu_n(cands, refs, 4) == pytest.approx(expected)


def test_length_mismatch():
    with pytest.raises(MetricError):
        bleu_n([["a"]], [], 4)
    with pytest.raises(MetricError):
        bleu_n([], [], 4)


def test_short_candidate_has_no_higher_order_ngrams():
    assert modified_precision(["a", "b"], ["a", "b", "c"], 3) == (0, 0)


def test_pooled_counts_are_not_reduced():
    cands = ["a b c d e".split(), "a b".split()]
    refs = ["a b x d e".split(), "a b".split()]
    # bigrams 2/4 and 1/1 pool to 3/5
    expected = 100.0 * ((6 / 7) * (3 / 5)) ** 0.5
    assert bleu_n(cands, refs, 2, smoothing=False) == pytest.approx(expected)


def _papineni_bleu(cands, refs, n, smoothing=True):
    """BLEU from its definition: clipped counts over all candidate n-grams, pooled."""
    matches, totals = [0] * n, [0] * n
    for c, r in zip(cands, refs):
        for k in range(1, n + 1):
            grams = [tuple(c[i:i + k]) for i in range(len(c) - k + 1)]
            ref_grams = [tuple(r[i:i + k]) for i in range(len(r) - k + 1)]
            matches[k - 1] += sum(min(grams.count(g), ref_grams.count(g)) for g in set(grams))
            totals[k - 1] += len(grams)
    logs = []
    for k in range(n):
        m, t = matches[k], totals[k]
        if m == 0 and smoothing and k >= 1:
            m, t = 1, t + 1
        elif m == 0:
            return 0.0
        logs.append(math.log(m / t))
    c_len = sum(len(c) for c in cands)
    r_len = sum(len(r) for r in refs)
    bp = 1.0 if c_len > r_len else math.exp(1 - r_len / c_len)
    return 100.0 * bp * math.exp(sum(logs) / n)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_matches_the_definition_on_random_pairs(seed):
    rng = random.Random(seed)
    words = "a b c d e".split()
    cands, refs = [], []
    for _ in range(20):
        length = rng.randint(2, 7)
        refs.append([rng.choice(words) for _ in range(length)])
        cands.append([rng.choice(words) for _ in range(length + rng.choice([-1, 0, 1]))])
    for n in (3, 4):
        assert bleu_n(cands, refs, n) == pytest.approx(_papineni_bleu(cands, refs, n), abs=1e-9)
