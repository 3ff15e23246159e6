"""
Model-agnostic teacher forcing, scoring and decoding.

Anything exposing ``start``/``step`` (the seq2seq network as well as the
tabular lab models) can be scored, sampled and decoded by the functions here.
"""
from typing import Any, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from ..core.params import ParameterStore
from ..core.tensor import Tensor, add_n, constant, mul, no_grad, pick
from ..data.batch import Batch, PAD, collate


class ConditionalLM(Protocol):
    """An autoregressive conditional distribution over target tokens."""
    store: ParameterStore
    vocab_size: int
    eos_id: Optional[int]

    def start(self, src: np.ndarray, src_mask: np.ndarray) -> Any:
        ...

    def step(self, state: Any, y_prev: Optional[np.ndarray]) -> Tuple[Tensor, Any]:
        """Return per-row log-probabilities ``[B x V]`` and the next state."""
        ...


def step_log_probs(model: ConditionalLM, batch: Batch) -> List[Tensor]:
    """Teacher-forced log-distributions, one ``[B x V]`` tensor per target step."""
    state = model.start(batch.src, batch.src_mask)
    out = []
    y_prev = None
    for t in range(batch.tgt.shape[1]):
        logp, state = model.step(state, y_prev)
        out.append(logp)
        y_prev = batch.tgt[:, t]
    return out


def sequence_log_probs(model: ConditionalLM, batch: Batch,
                       steps: Optional[List[Tensor]] = None) -> Tensor:
    """Per-row ``sum_t log p(y_t | X, y_<t)`` over unmasked target positions."""
    steps = step_log_probs(model, batch) if steps is None else steps
    terms = [
        mul(pick(logp, batch.tgt[:, t]), constant(batch.tgt_mask[:, t]))
        for t, logp in enumerate(steps)
    ]
    return add_n(terms)


def sequence_log_prob(model: ConditionalLM, src: Sequence[int], tgt: Sequence[int]) -> float:
    """Log-probability of one target sequence given one source sequence."""
    with no_grad():
        return float(sequence_log_probs(model, collate([src], [tgt])).data[0])


def _draw(logp: np.ndarray, temperature: float, rng: np.random.Generator) -> np.ndarray:
    z = logp / temperature
    z = z - z.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    cdf = np.cumsum(p, axis=1)
    # u in (0, total] so zero-probability tokens are never chosen
    u = (1.0 - rng.random(p.shape[0])) * cdf[:, -1]
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, p.shape[1] - 1)


def _decode(model: ConditionalLM, src: np.ndarray, src_mask: np.ndarray, max_len: int,
            choose) -> List[List[int]]:
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    eos = model.eos_id
    rows = src.shape[0]
    seqs: List[List[int]] = [[] for _ in range(rows)]
    done = np.zeros(rows, dtype=bool)
    with no_grad():
        state = model.start(src, src_mask)
        y_prev = None
        for _ in range(max_len):
            logp, state = model.step(state, y_prev)
            tokens = choose(logp.data)
            for r in np.flatnonzero(~done):
                seqs[r].append(int(tokens[r]))
                if eos is not None and tokens[r] == eos:
                    done[r] = True
            if done.all():
                break
            y_prev = np.where(done, eos if eos is not None else PAD, tokens)
    return seqs


def sample_sequence(model: ConditionalLM, src: np.ndarray, src_mask: np.ndarray,
                    temperature: float = 1.0, max_len: int = 100,
                    rng: Union[int, np.random.Generator, None] = None) -> List[List[int]]:
    """Ancestral sampling from ``softmax(logits / temperature)``; stops at EOS or max_len."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return _decode(model, src, src_mask, max_len, lambda lp: _draw(lp, temperature, gen))


def greedy_decode(model: ConditionalLM, src: np.ndarray, src_mask: np.ndarray,
                  max_len: int = 100) -> List[List[int]]:
    """Argmax decoding; ties go to the lowest token id."""
    return _decode(model, src, src_mask, max_len, lambda lp: np.argmax(lp, axis=1))


def sample_batch(model: ConditionalLM, batch: Batch, temperature: float, max_len: int,
                 rng: np.random.Generator) -> Batch:
    """Replace the targets of ``batch`` by samples from ``model``."""
    seqs = sample_sequence(model, batch.src, batch.src_mask, temperature, max_len, rng)
    return batch.with_target(seqs)
