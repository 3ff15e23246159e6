import numpy as np
import pytest

from t2t.config import PipelineConfig
from t2t.core.params import ParameterStore
from t2t.core.tensor import constant
from t2t.data.corpus import make_mini_corpus, separable_spec
from t2t.data.pipeline import Pipeline
from t2t.data.rdf import Triple
from t2t.exceptions import MetricError, VocabError
from t2t.lab.tabular import TabularAR, exact_forward_perplexity
from t2t.metrics.likelihood import (
    EvalLM,
    corpus_perplexity,
    forward_perplexity,
    predicate_accuracy,
    predict_predicates,
)
from t2t.metrics.report import predicate_items
from t2t.model.config import ModelConfig
from t2t.model.seq2seq import Seq2Seq

from conftest import zero_model

PREDICATE_IDS = {"birthPlace": 4, "employer": 5, "spouse": 6}


class EchoLM:
    """Puts almost all mass on the token equal to the first source id."""

    def __init__(self, vocab_size: int = 8):
        self.store = ParameterStore()
        self.vocab_size = vocab_size
        self.eos_id = None

    def start(self, src, src_mask):
        return np.asarray(src)[:, 0]

    def step(self, state, y_prev):
        logits = np.full((len(state), self.vocab_size), -5.0)
        logits[np.arange(len(state)), state] = 5.0
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        return constant(logp), state


def _encode(kb):
    return [PREDICATE_IDS[kb.triples[0].predicate]]


def test_uniform_model_perplexity_is_vocab_size(tiny_config):
    model = zero_model(tiny_config)
    assert corpus_perplexity(model, [[4], [5, 4]], [[3, 2], [4, 4, 2]]) == pytest.approx(5.0)


def test_forward_perplexity_of_a_uniform_scorer(tiny_config, tiny_model):
    scorer = EvalLM(zero_model(tiny_config), trained=True)
    assert forward_perplexity(scorer, tiny_model, [[4, 5], [5]], 3, seed=0) == pytest.approx(5.0)


def test_forward_perplexity_needs_a_trained_model(tiny_config, tiny_model):
    with pytest.raises(MetricError):
        forward_perplexity(EvalLM(zero_model(tiny_config)), tiny_model, [[4]])


def test_forward_perplexity_checks_vocabularies(tiny_config, tiny_model):
    other = ModelConfig.from_dict({**tiny_config.to_dict(), "vocab_tgt": 9})
    with pytest.raises(VocabError):
        forward_perplexity(EvalLM(zero_model(other), trained=True), tiny_model, [[4]])


def test_forward_perplexity_is_seeded(tiny_config, tiny_model, rng):
    scorer = EvalLM.create(tiny_config, rng)
    scorer.trained = True
    a = forward_perplexity(scorer, tiny_model, [[4, 5], [5]], 2, seed=3)
    b = forward_perplexity(scorer, tiny_model, [[4, 5], [5]], 2, seed=3)
    assert a == b


def test_eval_lm_save_and_load(tmp_path, tiny_config, rng):
    scorer = EvalLM.create(tiny_config, rng)
    scorer.trained = True
    scorer.save(tmp_path / "eval_lm.json")
    loaded = EvalLM.load(tmp_path / "eval_lm.json")
    assert loaded.trained
    assert loaded.model.store.dumps() == scorer.model.store.dumps()


def test_eval_lm_widths():
    cfg = EvalLM.model_config(ModelConfig(vocab_src=7, vocab_tgt=9), embed_dim=8, hidden_dim=12)
    assert (cfg.vocab_src, cfg.vocab_tgt, cfg.embed_dim, cfg.hidden_dim, cfg.output_dim) == (7, 9, 8, 12, 12)


def test_predicate_accuracy_of_a_perfect_scorer():
    items = [(Triple("PERSON", p, "X"), [PREDICATE_IDS[p]]) for p in ("spouse", "birthPlace", "employer")]
    predicates = list(PREDICATE_IDS)
    assert predict_predicates(EchoLM(), items, predicates, _encode) == ["spouse", "birthPlace", "employer"]
    assert predicate_accuracy(EchoLM(), items, predicates, _encode) == 1.0


def test_ties_go_to_the_first_predicate():
    model = zero_model(ModelConfig(vocab_src=8, vocab_tgt=8, embed_dim=2, hidden_dim=2, output_dim=2))
    items = [(Triple("PERSON", "employer", "X"), [4, 2]), (Triple("PERSON", "birthPlace", "X"), [4, 2])]
    assert predicate_accuracy(model, items, ["employer", "birthPlace"], _encode) == 0.5


def test_predicate_accuracy_needs_two_candidates():
    with pytest.raises(MetricError):
        predicate_accuracy(EchoLM(), [(Triple("a", "spouse", "b"), [6])], ["spouse"], _encode)


def test_untrained_generator_is_near_chance():
    corpus = make_mini_corpus(separable_spec(train=100, test=100), seed=0)
    pipeline = Pipeline(PipelineConfig(max_perms=1), max_src_len=16, max_tgt_len=16)
    src, tgt = pipeline.fit_vocab(corpus["train"])
    config = ModelConfig(vocab_src=len(src), vocab_tgt=len(tgt), embed_dim=8, hidden_dim=8, output_dim=8,
                         max_src_len=16, max_tgt_len=16)
    model = Seq2Seq.create(config, np.random.default_rng(0))
    items = predicate_items(corpus["test"], pipeline)
    predicates = sorted({triple.predicate for triple, _ in items})
    chance = 1.0 / len(predicates)
    sigma = np.sqrt(chance * (1.0 - chance) / len(items))
    accuracy = predicate_accuracy(model, items, predicates, pipeline.encode_source)
    assert abs(accuracy - chance) <= 3 * sigma


def test_sampled_forward_perplexity_approaches_the_exact_value():
    rng = np.random.default_rng(0)
    scorer = TabularAR.create(3, 2, rng, "full", role="scorer")
    generator = TabularAR.create(3, 2, rng, "full", role="generator")
    sampled = forward_perplexity(EvalLM(scorer, trained=True), generator, [[0]] * 10000, seed=1, batch_size=2000)
    exact = exact_forward_perplexity(scorer, generator)
    assert sampled == pytest.approx(exact, rel=0.02)
