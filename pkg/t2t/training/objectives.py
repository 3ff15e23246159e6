"""
Training objectives: maximum likelihood, the judger update and the
inverse-KL generator loss.

All losses are scalar tensors recorded on the active tape. The judger is only
ever evaluated under ``no_grad`` inside the inverse-KL loss, so a backward pass
through that loss leaves every judger gradient at exactly zero.
"""
import logging
from typing import Optional, Tuple, Union

import numpy as np

from ..core.params import adam_step
from ..core.tensor import (
    ComputeTape,
    Tensor,
    add_n,
    backward,
    constant,
    exp,
    mul,
    no_grad,
    pick,
    reduce_mean,
    reduce_sum,
    scalar_mul,
    sub,
)
from ..data.batch import Batch
from ..exceptions import DatasetError, VocabError
from ..model.decoding import ConditionalLM, sample_batch, sequence_log_probs, step_log_probs

logger = logging.getLogger(__name__)

SAMPLED_TOKEN = "sampled-token"
PER_STEP_EXPECTED = "per-step-expected"


def _require_rows(batch: Batch) -> None:
    if batch.size == 0:
        raise DatasetError("empty batch")


def _normalised(rows: Tensor, batch: Batch, normalize: str) -> Tensor:
    if normalize == "sequence":
        return rows
    if normalize != "token":
        raise ValueError(f"unknown normalisation '{normalize}'")
    return mul(rows, constant(1.0 / np.maximum(batch.target_lengths(), 1.0)))


def mle_loss(model: ConditionalLM, batch: Batch) -> Tensor:
    """Mean over the batch of ``-log p(Y|X) / |Y|`` with teacher forcing."""
    _require_rows(batch)
    logp = sequence_log_probs(model, batch)
    return scalar_mul(reduce_mean(_normalised(logp, batch, "token")), -1.0)


def optimise(model: ConditionalLM, loss_fn, lr: float) -> float:
    """Record ``loss_fn()``, backpropagate and take one Adam step on ``model.store``."""
    model.store.zero_grad()
    with ComputeTape() as tape:
        loss = loss_fn()
    backward(tape, loss)
    adam_step(model.store, lr)
    return loss.item()


def judger_update(judger: ConditionalLM, batch: Batch, lr: float = 0.001) -> float:
    """One Adam step of maximum likelihood on real pairs; returns the pre-step loss."""
    return optimise(judger, lambda: mle_loss(judger, batch), lr)


# -- inverse KL ---------------------------------------------------------------

def _check_pair(generator: ConditionalLM, judger: ConditionalLM) -> None:
    if generator.vocab_size != judger.vocab_size:
        raise VocabError(
            f"generator vocabulary ({generator.vocab_size}) differs from judger ({judger.vocab_size})"
        )


def inverse_kl_rows(generator: ConditionalLM, judger: ConditionalLM, batch: Batch,
                    estimator: str = PER_STEP_EXPECTED, normalize: str = "token") -> Tensor:
    """Per-row divergence of the generator from the judger along the prefixes in ``batch.tgt``.

    ``sampled-token`` sums ``log g(y_t) - log m(y_t)`` at the given tokens;
    ``per-step-expected`` sums the exact next-token KL at every prefix.
    """
    _check_pair(generator, judger)
    _require_rows(batch)
    gen_steps = step_log_probs(generator, batch)
    with no_grad():
        judge_steps = [constant(t.data) for t in step_log_probs(judger, batch)]
    terms = []
    for t, (logg, logm) in enumerate(zip(gen_steps, judge_steps)):
        mask = constant(batch.tgt_mask[:, t])
        if estimator == SAMPLED_TOKEN:
            ids = batch.tgt[:, t]
            term = sub(pick(logg, ids), pick(logm, ids))
        elif estimator == PER_STEP_EXPECTED:
            term = reduce_sum(mul(exp(logg), sub(logg, logm)), axis=1)
        else:
            raise ValueError(f"unknown estimator '{estimator}'")
        terms.append(mul(term, mask))
    return _normalised(add_n(terms), batch, normalize)


def inverse_kl_loss(generator: ConditionalLM, judger: ConditionalLM, batch: Batch,
                    estimator: str = PER_STEP_EXPECTED, normalize: str = "token",
                    temperature: float = 1.0, max_len: Optional[int] = None,
                    rng: Union[int, np.random.Generator, None] = None) -> Tensor:
    """Sample targets from the generator for ``batch.src`` and score them against the judger."""
    _check_pair(generator, judger)
    _require_rows(batch)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    limit = getattr(generator, "max_len", 100) if max_len is None else max_len
    sampled = sample_batch(generator, batch, temperature, limit, gen)
    return reduce_mean(inverse_kl_rows(generator, judger, sampled, estimator, normalize))


def ikl_decomposition(generator: ConditionalLM, judger: ConditionalLM, batch: Batch,
                      normalize: str = "token") -> Tuple[float, float]:
    """Split the per-step-expected loss into ``(-entropy, cross-entropy)`` along ``batch.tgt``.

    The two parts add up to ``inverse_kl_rows(..., "per-step-expected")`` averaged over rows.
    """
    _check_pair(generator, judger)
    _require_rows(batch)
    with no_grad():
        gen_steps = step_log_probs(generator, batch)
        judge_steps = step_log_probs(judger, batch)
    neg_entropy = np.zeros(batch.size)
    cross = np.zeros(batch.size)
    for t, (logg, logm) in enumerate(zip(gen_steps, judge_steps)):
        g = np.exp(logg.data)
        mask = batch.tgt_mask[:, t]
        neg_entropy += mask * (g * logg.data).sum(axis=1)
        cross -= mask * (g * logm.data).sum(axis=1)
    if normalize == "token":
        lengths = np.maximum(batch.target_lengths(), 1.0)
        neg_entropy, cross = neg_entropy / lengths, cross / lengths
    return float(neg_entropy.mean()), float(cross.mean())
