"""
LSTM encoder-decoder with additive (Bahdanau) attention.

Computes ``p(y_t | y_<t, X) = softmax(W z_t + b)`` where
``z_t = tanh(W_hz h_t^dec + W_cz c_t + b_z)`` and ``c_t`` is the attention
summary of the encoder states. The same class serves as generator, judger and
evaluation language model; only the parameter store differs.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.params import ParameterStore, gaussian_init
from ..core.tensor import (
    MASK_SURROGATE,
    Tensor,
    add,
    add_n,
    bias_add,
    column_slice,
    concat_cols,
    constant,
    embedding_lookup,
    log_softmax,
    matmul,
    mul,
    no_grad,
    scale_rows,
    sigmoid,
    softmax,
    tanh,
    zeros,
)
from ..data.batch import EOS, Batch, collate
from ..exceptions import ShapeError, VocabError
from .config import ModelConfig
from . import decoding

logger = logging.getLogger(__name__)


@dataclass
class LSTMWeights:
    W_x: Tensor
    W_h: Tensor
    b: Tensor
    W_c: Optional[Tensor] = None


@dataclass
class DecoderState:
    h: Tensor
    c: Tensor
    t: int = 1


@dataclass
class EncoderOutput:
    states: List[Tensor]
    keys: List[Tensor]
    mask: np.ndarray
    mask_bias: Tensor
    last: Tensor


@dataclass
class _Context:
    """Decoder state plus the encoder output it attends over."""
    enc: EncoderOutput
    dec: DecoderState


def lstm_cell_step(x: Tensor, state: Tuple[Tensor, Tensor], weights: LSTMWeights,
                   extra: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
    """One LSTM step over a batch; gate columns are laid out as [i, f, g, o]."""
    h, c = state
    hidden = h.shape[1]
    if weights.W_h.shape != (hidden, 4 * hidden) or x.shape[1] != weights.W_x.shape[0]:
        raise ShapeError(f"lstm_cell_step: input {x.shape} / state {h.shape} do not fit weights")
    pre = [matmul(x, weights.W_x), matmul(h, weights.W_h)]
    if extra is not None:
        pre.append(matmul(extra, weights.W_c))
    gates = bias_add(add_n(pre), weights.b)
    i = sigmoid(column_slice(gates, 0, hidden))
    f = sigmoid(column_slice(gates, hidden, 2 * hidden))
    g = tanh(column_slice(gates, 2 * hidden, 3 * hidden))
    o = sigmoid(column_slice(gates, 3 * hidden, 4 * hidden))
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next


class Seq2Seq:
    """Encoder-decoder whose parameters live in a ``ParameterStore``."""

    def __init__(self, config: ModelConfig, store: ParameterStore):
        self.config = config.validate()
        self.store = store
        self.vocab_size = config.vocab_tgt
        self.eos_id: Optional[int] = EOS
        expected = self.parameter_shapes(config)
        if store.names() != list(expected):
            raise ShapeError(f"store layout does not match model ({store.role})")
        for name, shape in expected.items():
            if store.value(name).shape != shape:
                raise ShapeError(f"{name}: expected {shape}, found {store.value(name).shape}")

    @property
    def max_len(self) -> int:
        return self.config.max_tgt_len

    @staticmethod
    def parameter_shapes(config: ModelConfig) -> dict:
        E, H, O = config.embed_dim, config.hidden_dim, config.output_dim
        return {
            "enc.embed": (config.vocab_src, E),
            "enc.W_x": (E, 4 * H),
            "enc.W_h": (H, 4 * H),
            "enc.b": (4 * H,),
            "dec.embed": (config.vocab_tgt, E),
            "dec.W_x": (E, 4 * H),
            "dec.W_c": (H, 4 * H),
            "dec.W_h": (H, 4 * H),
            "dec.b": (4 * H,),
            "att.W_a": (H, H),
            "att.U_a": (H, H),
            "att.v_a": (H, 1),
            "out.W_h": (H, O),
            "out.W_c": (H, O),
            "out.b_z": (O,),
            "out.W": (O, config.vocab_tgt),
            "out.b": (config.vocab_tgt,),
        }

    @classmethod
    def create(cls, config: ModelConfig, rng: np.random.Generator, role: str = "generator") -> "Seq2Seq":
        config.validate()
        store = ParameterStore(role=role)
        unit = config.init_scheme == "unit"
        for name, shape in cls.parameter_shapes(config).items():
            if len(shape) == 1 and not unit:
                value = np.zeros(shape)
            else:
                value = gaussian_init(rng, shape, 1.0 if unit else config.init_scale)
            store.add(name, value)
        logger.debug("Initialised %s with %d scalars", role, store.num_scalars())
        return cls(config, store)

    # -- weights ----------------------------------------------------------

    def _encoder_weights(self) -> LSTMWeights:
        s = self.store
        return LSTMWeights(s["enc.W_x"], s["enc.W_h"], s["enc.b"])

    def _decoder_weights(self) -> LSTMWeights:
        s = self.store
        return LSTMWeights(s["dec.W_x"], s["dec.W_h"], s["dec.b"], s["dec.W_c"])

    # -- encoder ----------------------------------------------------------

    def encode(self, src: np.ndarray, src_mask: Optional[np.ndarray] = None) -> EncoderOutput:
        src = np.atleast_2d(np.asarray(src, dtype=np.int64))
        if src.shape[1] == 0:
            raise ShapeError("empty source sequence")
        mask = np.ones(src.shape) if src_mask is None else np.atleast_2d(np.asarray(src_mask, dtype=np.float64))
        lengths = mask.sum(axis=1).astype(np.int64)
        if np.any(lengths < 1):
            raise ShapeError("every source row needs at least one unmasked position")
        if src.min() < 0 or src.max() >= self.config.vocab_src:
            raise VocabError(f"source token out of range [0, {self.config.vocab_src})")
        rows, H = src.shape[0], self.config.hidden_dim
        weights = self._encoder_weights()
        table = self.store["enc.embed"]
        h, c = zeros((rows, H)), zeros((rows, H))
        states = []
        for t in range(src.shape[1]):
            h, c = lstm_cell_step(embedding_lookup(table, src[:, t]), (h, c), weights)
            states.append(h)
        keys = []
        if self.config.attention:
            U = self.store["att.U_a"]
            keys = [matmul(s, U) for s in states]
        onehot_last = np.zeros(src.shape)
        onehot_last[np.arange(rows), lengths - 1] = 1.0
        last = add_n([scale_rows(s, constant(onehot_last[:, i])) for i, s in enumerate(states)])
        mask_bias = constant(np.where(mask > 0, 0.0, MASK_SURROGATE))
        return EncoderOutput(states, keys, mask, mask_bias, last)

    def attention_context(self, enc: EncoderOutput, h_prev: Tensor) -> Tuple[Tensor, Optional[Tensor]]:
        """Return ``(c_t, alpha)``; without attention ``c_t`` is the last encoder state."""
        if not self.config.attention:
            return enc.last, None
        query = matmul(h_prev, self.store["att.W_a"])
        v = self.store["att.v_a"]
        scores = concat_cols([matmul(tanh(add(query, key)), v) for key in enc.keys])
        alpha = softmax(add(scores, enc.mask_bias))
        context = add_n([
            scale_rows(s, column_slice(alpha, i, i + 1)) for i, s in enumerate(enc.states)
        ])
        return context, alpha

    # -- decoder ----------------------------------------------------------

    def initial_state(self, rows: int) -> DecoderState:
        H = self.config.hidden_dim
        return DecoderState(zeros((rows, H)), zeros((rows, H)), 1)

    def _step_logits(self, state: DecoderState, y_prev: Optional[np.ndarray],
                     enc: EncoderOutput) -> Tuple[Tensor, DecoderState]:
        rows = state.h.shape[0]
        if y_prev is None:
            emb = zeros((rows, self.config.embed_dim))
        else:
            y_prev = np.asarray(y_prev, dtype=np.int64).reshape(-1)
            if y_prev.min() < 0 or y_prev.max() >= self.config.vocab_tgt:
                raise VocabError(f"target token out of range [0, {self.config.vocab_tgt})")
            emb = embedding_lookup(self.store["dec.embed"], y_prev)
        context, _ = self.attention_context(enc, state.h)
        h, c = lstm_cell_step(emb, (state.h, state.c), self._decoder_weights(), extra=context)
        s = self.store
        z = tanh(bias_add(add(matmul(h, s["out.W_h"]), matmul(context, s["out.W_c"])), s["out.b_z"]))
        logits = bias_add(matmul(z, s["out.W"]), s["out.b"])
        return logits, DecoderState(h, c, state.t + 1)

    def decode_step(self, state: DecoderState, y_prev: Optional[np.ndarray],
                    enc: EncoderOutput) -> Tuple[Tensor, DecoderState]:
        """Distribution over target tokens and the updated state.

        ``y_prev=None`` marks the first step, whose input embedding is zero.
        """
        logits, new_state = self._step_logits(state, y_prev, enc)
        return softmax(logits), new_state

    # -- ConditionalLM interface -------------------------------------------

    def start(self, src: np.ndarray, src_mask: np.ndarray) -> _Context:
        enc = self.encode(src, src_mask)
        return _Context(enc, self.initial_state(enc.mask.shape[0]))

    def step(self, ctx: _Context, y_prev: Optional[np.ndarray]) -> Tuple[Tensor, _Context]:
        logits, dec = self._step_logits(ctx.dec, y_prev, ctx.enc)
        return log_softmax(logits), _Context(ctx.enc, dec)

    # -- convenience -------------------------------------------------------

    def sequence_log_prob(self, src: Sequence[int], tgt: Sequence[int]) -> float:
        return decoding.sequence_log_prob(self, src, tgt)

    def sample_sequence(self, src: Sequence[int], temperature: float = 1.0,
                        max_len: Optional[int] = None, rng_seed: Optional[int] = None) -> List[int]:
        batch = collate([src])
        limit = self.config.max_tgt_len if max_len is None else max_len
        return decoding.sample_sequence(self, batch.src, batch.src_mask, temperature, limit, rng_seed)[0]

    def greedy_decode(self, src: Sequence[int], max_len: Optional[int] = None) -> List[int]:
        batch = collate([src])
        limit = self.config.max_tgt_len if max_len is None else max_len
        return decoding.greedy_decode(self, batch.src, batch.src_mask, limit)[0]

    def frozen_log_probs(self, batch: Batch) -> List[np.ndarray]:
        """Teacher-forced log-distributions as plain arrays, recording nothing."""
        with no_grad():
            return [t.data for t in decoding.step_log_probs(self, batch)]
