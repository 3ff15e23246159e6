import numpy as np
import pytest

from t2t.core.params import ParameterStore
from t2t.data.corpus import MiniCorpusSpec, make_mini_corpus
from t2t.data.rdf import KnowledgeBase, Record
from t2t.data.vocab import EncodedExample
from t2t.model.config import ModelConfig
from t2t.model.seq2seq import Seq2Seq


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_config():
    return ModelConfig(vocab_src=6, vocab_tgt=5, embed_dim=3, hidden_dim=4, output_dim=4,
                       max_src_len=8, max_tgt_len=6)


@pytest.fixture
def tiny_model(tiny_config, rng):
    return Seq2Seq.create(tiny_config, rng)


def zero_model(config: ModelConfig) -> Seq2Seq:
    store = ParameterStore(role="zero")
    for name, shape in Seq2Seq.parameter_shapes(config).items():
        store.add(name, np.zeros(shape))
    return Seq2Seq(config, store)


def clone(model: Seq2Seq, role: str = "clone") -> Seq2Seq:
    return Seq2Seq(model.config, ParameterStore.from_dict(model.store.to_dict(), role=role))


@pytest.fixture
def gates_record():
    kb = KnowledgeBase.of([
        ("Bill Gates", "founder", "Microsoft Corporation"),
        ("Microsoft Corporation", "startDate", "April 4, 1975"),
    ])
    return Record(kb, "Bill Gates founded the Microsoft Corporation in April 4, 1975", {
        "Bill Gates": "PERSON",
        "Microsoft Corporation": "CORPORATION",
        "April 4, 1975": "DATE",
    })


@pytest.fixture(scope="session")
def small_corpus():
    spec = MiniCorpusSpec(train=60, valid=10, test=12, min_predicate_count=5)
    return make_mini_corpus(spec, seed=0)


def random_examples(n, vocab_src, vocab_tgt, rng, max_len=4):
    out = []
    for _ in range(n):
        src = [int(i) for i in rng.integers(4, vocab_src, size=int(rng.integers(1, max_len + 1)))]
        tgt = [int(i) for i in rng.integers(4, vocab_tgt, size=int(rng.integers(1, max_len)))] + [2]
        out.append(EncodedExample(src, tgt))
    return out
