import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from t2t.exceptions import MetricError
from t2t.metrics.meteor import align, corpus_meteor, count_chunks, meteor_exact


def test_single_identical_word():
    assert meteor_exact(["cat"], ["cat"]) == pytest.approx(0.5)


def test_identical_sentence_has_one_chunk():
    s = "a b c d".split()
    assert meteor_exact(s, s) == pytest.approx(1.0 - 0.5 * (1 / 4) ** 3)


def test_no_matches():
    assert meteor_exact(["x"], ["y", "z"]) == 0.0


def test_two_chunks():
    assert meteor_exact("a b c d".split(), "c d a b".split()) == pytest.approx(1.0 - 0.5 * (2 / 4) ** 3)


def test_recall_is_weighted_over_precision():
    score = meteor_exact("a b".split(), "a b c d".split())
    fmean = 10 * 1.0 * 0.5 / (0.5 + 9 * 1.0)
    assert score == pytest.approx(fmean * (1 - 0.5 * (1 / 2) ** 3))


def test_alignment_minimises_chunks():
    alignment = align("the cat the".split(), "the the cat".split())
    assert alignment.matches == 3
    assert alignment.chunks == 2


def test_count_chunks():
    assert count_chunks([(0, 0), (1, 1), (2, 5)]) == 2
    assert count_chunks([]) == 0


def test_corpus_meteor_is_the_mean():
    cands = [["cat"], ["x"]]
    refs = [["cat"], ["y"]]
    assert corpus_meteor(cands, refs) == pytest.approx(0.25)


def test_empty_reference():
    with pytest.raises(MetricError):
        meteor_exact(["a"], [])


def _brute_force_chunks(candidate, reference):
    best = (0, 0)

    def walk(i, used, pairs):
        nonlocal best
        if i == len(candidate):
            key = (len(pairs), -count_chunks(pairs))
            if key > best:
                best = key
            return
        for j, w in enumerate(reference):
            if w == candidate[i] and j not in used:
                walk(i + 1, used | {j}, pairs + [(i, j)])
        walk(i + 1, used, pairs)

    walk(0, frozenset(), [])
    return best[0], -best[1]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=6),
       st.lists(st.sampled_from("abc"), min_size=1, max_size=6))
def test_alignment_matches_exhaustive_search(candidate, reference):
    alignment = align(candidate, reference)
    assert (alignment.matches, alignment.chunks) == _brute_force_chunks(candidate, reference)
