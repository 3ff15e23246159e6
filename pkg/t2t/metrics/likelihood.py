"""
Likelihood-based metrics: forward perplexity under an evaluation language
model, and predicate accuracy.
"""
import logging
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.params import ParameterStore
from ..core.storage import read_json
from ..core.tensor import no_grad
from ..data.batch import Batch, collate
from ..data.rdf import KnowledgeBase, Triple
from ..exceptions import MetricError, VocabError
from ..model.config import ModelConfig
from ..model.decoding import ConditionalLM, sample_sequence, sequence_log_probs
from ..model.seq2seq import Seq2Seq

logger = logging.getLogger(__name__)


class EvalLM:
    """A frozen language model H used only to score generated text."""

    def __init__(self, model: ConditionalLM, trained: bool = False):
        self.model = model
        self.trained = trained

    @property
    def vocab_size(self) -> int:
        return self.model.vocab_size

    @staticmethod
    def model_config(base: ModelConfig, embed_dim: int = 64, hidden_dim: int = 300) -> ModelConfig:
        """Generator shape with the evaluation model's own widths."""
        cfg = ModelConfig.from_dict(base.to_dict())
        cfg.embed_dim, cfg.hidden_dim, cfg.output_dim = embed_dim, hidden_dim, hidden_dim
        return cfg.validate()

    @classmethod
    def create(cls, config: ModelConfig, rng: np.random.Generator) -> "EvalLM":
        return cls(Seq2Seq.create(config, rng, role="eval_lm"), trained=False)

    def fit(self, examples, epochs: int, batch_size: int, lr: float, rng: np.random.Generator,
            progress: bool = False) -> List[float]:
        """Maximum-likelihood training on real pairs; returns per-epoch mean losses."""
        from ..training.trainer import fit_mle
        losses = fit_mle(self.model, examples, epochs, batch_size, lr, rng, desc="eval-lm", progress=progress)
        self.trained = True
        return losses

    def save(self, path: Union[str, Path]) -> None:
        self.model.store.save(path, meta={"role": "eval_lm", "trained": self.trained,
                                          "model": self.model.config.to_dict()})

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EvalLM":
        doc = read_json(path)
        meta = doc.get("meta") or {}
        if "model" not in meta:
            raise MetricError(f"{path} is not an evaluation model checkpoint")
        store = ParameterStore.from_dict(doc, role="eval_lm")
        return cls(Seq2Seq(ModelConfig.from_dict(meta["model"]), store), bool(meta.get("trained", False)))


def batch_log_likelihood(model: ConditionalLM, batch: Batch) -> Tuple[float, float]:
    """Total log-probability of ``batch.tgt`` and its number of tokens."""
    with no_grad():
        logp = sequence_log_probs(model, batch)
    return float(logp.data.sum()), float(batch.tgt_mask.sum())


def corpus_perplexity(model: ConditionalLM, sources: Sequence[Sequence[int]],
                      targets: Sequence[Sequence[int]], batch_size: int = 64) -> float:
    """``exp(-total log-prob / total tokens)`` of fixed targets."""
    if not sources:
        raise MetricError("no sequences to score")
    total, tokens = 0.0, 0.0
    for start in range(0, len(sources), batch_size):
        batch = collate(sources[start:start + batch_size], targets[start:start + batch_size])
        lp, n = batch_log_likelihood(model, batch)
        total, tokens = total + lp, tokens + n
    return math.exp(-total / tokens)


def forward_perplexity(eval_lm: EvalLM, generator: ConditionalLM, contexts: Sequence[Sequence[int]],
                       samples_per_context: int = 1, seed: Union[int, np.random.Generator, None] = 0,
                       temperature: float = 1.0, max_len: Optional[int] = None,
                       batch_size: int = 64) -> float:
    """Perplexity of generator samples under the evaluation model."""
    if not eval_lm.trained:
        raise MetricError("forward perplexity needs a trained evaluation model")
    if eval_lm.vocab_size != generator.vocab_size:
        raise VocabError("evaluation model and generator use different target vocabularies")
    if not contexts:
        raise MetricError("no contexts to generate from")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    limit = getattr(generator, "max_len", 100) if max_len is None else max_len
    repeated = [list(c) for c in contexts for _ in range(samples_per_context)]
    total, tokens = 0.0, 0.0
    for start in range(0, len(repeated), batch_size):
        batch = collate(repeated[start:start + batch_size])
        samples = sample_sequence(generator, batch.src, batch.src_mask, temperature, limit, rng)
        lp, n = batch_log_likelihood(eval_lm.model, batch.with_target(samples))
        total, tokens = total + lp, tokens + n
    fppl = math.exp(-total / tokens)
    logger.debug("Forward perplexity %.4f over %d tokens", fppl, int(tokens))
    return fppl


def predict_predicates(generator: ConditionalLM, items: Sequence[Tuple[Triple, Sequence[int]]],
                       predicates: Sequence[str],
                       encode_source: Callable[[KnowledgeBase], List[int]]) -> List[str]:
    """For each ``(triple, target ids)`` the predicate under which the target is most likely.

    Candidates are tried in sorted order; ties go to the earliest.
    """
    if len(set(predicates)) < 2:
        raise MetricError("predicate accuracy needs at least two candidate predicates")
    predicates = sorted(set(predicates))
    out = []
    for triple, target in items:
        sources = [
            encode_source(KnowledgeBase((Triple(triple.subject, p, triple.object),)))
            for p in predicates
        ]
        batch = collate(sources, [list(target)] * len(predicates))
        with no_grad():
            scores = sequence_log_probs(generator, batch).data
        out.append(predicates[int(np.argmax(scores))])
    return out


def predicate_accuracy(generator: ConditionalLM, items: Sequence[Tuple[Triple, Sequence[int]]],
                       predicates: Sequence[str],
                       encode_source: Callable[[KnowledgeBase], List[int]]) -> float:
    """Fraction of single-triple examples whose true predicate maximises p(Y | <s, p, o>)."""
    if not items:
        raise MetricError("empty evaluation set")
    predicted = predict_predicates(generator, items, predicates, encode_source)
    hits = sum(1 for (triple, _), p in zip(items, predicted) if p == triple.predicate)
    return hits / len(items)
