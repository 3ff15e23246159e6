"""
Exactly enumerable autoregressive models over tiny vocabularies.

A ``TabularAR`` holds one logit table per step, indexed by the conditioning
context id and by a summary of the prefix: the whole prefix (``full``), the
previous token (``markov``) or nothing (``none``). Capacity can be reduced
further with a rank limit on every table or by tying one table across steps.
It implements the same ``start``/``step`` interface as the seq2seq model, so
decoding, the training objectives and the likelihood metrics run on it
unchanged.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.params import ParameterStore, gaussian_init
from ..core.tensor import Tensor, add_n, embedding_lookup, log_softmax, matmul, no_grad, pick
from ..data.batch import collate
from ..exceptions import LabError, ShapeError

logger = logging.getLogger(__name__)

CONTEXTS = ("full", "markov", "none")
MAX_VOCAB = 10
MAX_LENGTH = 5
MAX_SEQUENCES = 100_000
ZERO_MASS = 1e-12
LOG_FLOOR = 1e-300


def all_sequences(vocab: int, length: int) -> np.ndarray:
    """Every sequence in lexicographic order, shape ``[V^T, T]``."""
    return np.array(list(itertools.product(range(vocab), repeat=length)), dtype=np.int64).reshape(-1, length)


def _prefix_states(vocab: int, context: str, t: int) -> int:
    if context == "full":
        return vocab ** t
    if context == "markov":
        return vocab if t > 0 else 1
    return 1


def _table_rows(vocab: int, length: int, context: str, contexts: int, tied: bool, t: int) -> int:
    if tied:
        return contexts * max(_prefix_states(vocab, context, s) for s in range(length))
    return contexts * _prefix_states(vocab, context, t)


def _names(rank: Optional[int], tied: bool, t: int) -> Tuple[str, ...]:
    key = "shared" if tied else f"step{t}"
    return (f"{key}.logits",) if rank is None else (f"{key}.A", f"{key}.B")


def layout(vocab: int, length: int, context: str = "full", rank: Optional[int] = None,
           contexts: int = 1, tied: bool = False) -> Dict[str, Tuple[int, ...]]:
    """Parameter names and shapes of a tabular model."""
    shapes: Dict[str, Tuple[int, ...]] = {}
    for t in range(length):
        rows = _table_rows(vocab, length, context, contexts, tied, t)
        names = _names(rank, tied, t)
        if rank is None:
            shapes[names[0]] = (rows, vocab)
        else:
            shapes[names[0]] = (rows, rank)
            shapes[names[1]] = (rank, vocab)
    return shapes


@dataclass
class _TabState:
    ctx: np.ndarray
    prefix: np.ndarray
    t: int


class TabularAR:
    """Per-step conditional logit tables; see the module docstring."""

    def __init__(self, vocab: int, length: int, store: ParameterStore, context: str = "full",
                 rank: Optional[int] = None, contexts: int = 1, tied: bool = False):
        if not 1 <= vocab <= MAX_VOCAB or not 1 <= length <= MAX_LENGTH:
            raise LabError(f"tabular models need V <= {MAX_VOCAB} and T <= {MAX_LENGTH}")
        if vocab ** length > MAX_SEQUENCES:
            raise LabError(f"V^T = {vocab ** length} exceeds {MAX_SEQUENCES}")
        if context not in CONTEXTS:
            raise LabError(f"context must be one of {CONTEXTS}")
        if tied and context == "full" and length > 1:
            raise LabError("tied tables need a fixed-size prefix summary (markov or none)")
        if rank is not None and rank < 1:
            raise LabError("rank must be >= 1")
        self.V, self.T = vocab, length
        self.context = context
        self.rank = rank
        self.contexts = contexts
        self.tied = tied
        self.store = store
        self.vocab_size = vocab
        self.eos_id: Optional[int] = None
        expected = self.parameter_shapes()
        for name, shape in expected.items():
            if name not in store or store.value(name).shape != shape:
                raise ShapeError(f"tabular store lacks {name} {shape}")

    @property
    def max_len(self) -> int:
        return self.T

    def prefix_states(self, t: int) -> int:
        return _prefix_states(self.V, self.context, t)

    def _table_rows(self, t: int) -> int:
        return _table_rows(self.V, self.T, self.context, self.contexts, self.tied, t)

    def _names(self, t: int) -> Tuple[str, ...]:
        return _names(self.rank, self.tied, t)

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return layout(self.V, self.T, self.context, self.rank, self.contexts, self.tied)

    @classmethod
    def create(cls, vocab: int, length: int, rng: np.random.Generator, context: str = "full",
               rank: Optional[int] = None, contexts: int = 1, tied: bool = False,
               init_scale: float = 1.0, role: str = "tabular") -> "TabularAR":
        store = ParameterStore(role=role)
        for name, shape in layout(vocab, length, context, rank, contexts, tied).items():
            store.add(name, gaussian_init(rng, shape, init_scale))
        return cls(vocab, length, store, context, rank, contexts, tied)

    @classmethod
    def from_joint(cls, joint: np.ndarray, vocab: int, length: int, role: str = "target") -> "TabularAR":
        """Full-context model whose joint equals ``joint`` (shape ``[V^T]`` or ``[C, V^T]``)."""
        joint = np.atleast_2d(np.asarray(joint, dtype=np.float64))
        if joint.shape[1] != vocab ** length:
            raise ShapeError(f"joint of size {joint.shape[1]} does not match V^T = {vocab ** length}")
        if np.any(joint < 0) or not np.allclose(joint.sum(axis=1), 1.0, atol=1e-9):
            raise LabError("joint must be a probability vector per context")
        store = ParameterStore(role=role)
        for t in range(length):
            tables = []
            for row in joint:
                prefix = row.reshape(vocab ** t, -1).sum(axis=1)
                nxt = row.reshape(vocab ** (t + 1), -1).sum(axis=1).reshape(vocab ** t, vocab)
                cond = np.divide(nxt, prefix[:, None], out=np.full_like(nxt, 1.0 / vocab),
                                 where=prefix[:, None] > 0)
                tables.append(np.log(np.maximum(cond, LOG_FLOOR)))
            store.add(f"step{t}.logits", np.concatenate(tables, axis=0))
        return cls(vocab, length, store, "full", None, joint.shape[0])

    # -- ConditionalLM interface -------------------------------------------------

    def start(self, src: np.ndarray, src_mask: Optional[np.ndarray] = None) -> _TabState:
        ctx = np.atleast_2d(np.asarray(src, dtype=np.int64))[:, 0]
        if ctx.min() < 0 or ctx.max() >= self.contexts:
            raise ShapeError(f"context id out of range [0, {self.contexts})")
        return _TabState(ctx, np.zeros_like(ctx), 0)

    def step(self, state: _TabState, y_prev: Optional[np.ndarray]) -> Tuple[Tensor, _TabState]:
        t = state.t
        if t >= self.T:
            raise ShapeError(f"tabular model has only {self.T} steps")
        prefix = state.prefix
        if y_prev is not None and t > 0:
            y_prev = np.asarray(y_prev, dtype=np.int64).reshape(-1)
            if self.context == "full":
                prefix = prefix * self.V + y_prev
            elif self.context == "markov":
                prefix = y_prev
        rows_per_ctx = self._table_rows(t) // self.contexts
        rows = state.ctx * rows_per_ctx + (prefix if self.context != "none" else 0)
        names = self._names(t)
        if self.rank is None:
            logits = embedding_lookup(self.store[names[0]], rows)
        else:
            logits = matmul(embedding_lookup(self.store[names[0]], rows), self.store[names[1]])
        return log_softmax(logits), _TabState(state.ctx, prefix, t + 1)

    # -- enumeration ----------------------------------------------------------------

    def log_joint(self, ctx: int = 0) -> Tensor:
        """Differentiable ``log G(y | ctx)`` of every sequence, in ``all_sequences`` order."""
        seqs = all_sequences(self.V, self.T)
        state = self.start(np.full((len(seqs), 1), ctx))
        terms = []
        y_prev = None
        for t in range(self.T):
            logp, state = self.step(state, y_prev)
            terms.append(pick(logp, seqs[:, t]))
            y_prev = seqs[:, t]
        return add_n(terms)

    def joint(self, ctx: int = 0) -> np.ndarray:
        with no_grad():
            return np.exp(self.log_joint(ctx).data)

    def conditionals(self, t: int, ctx: int = 0) -> np.ndarray:
        """``[prefix states x V]`` next-token distributions at step ``t``."""
        per_ctx = self._table_rows(t) // self.contexts
        names = self._names(t)
        table = self.store.value(names[0])
        if self.rank is not None:
            table = table @ self.store.value(names[1])
        block = table[ctx * per_ctx:ctx * per_ctx + self.prefix_states(t)]
        z = np.exp(block - block.max(axis=1, keepdims=True))
        return z / z.sum(axis=1, keepdims=True)

    def sample(self, n: int, rng: np.random.Generator, ctx: int = 0) -> List[List[int]]:
        from ..model.decoding import sample_sequence
        batch = collate([[ctx]] * n)
        return sample_sequence(self, batch.src, batch.src_mask, 1.0, self.T, rng)


def empirical_joint(samples: np.ndarray, vocab: int, length: int) -> np.ndarray:
    """Relative frequency of each sequence, in ``all_sequences`` order."""
    samples = np.asarray(samples, dtype=np.int64).reshape(-1, length)
    if samples.size == 0:
        raise LabError("empty sample set")
    weights = vocab ** np.arange(length - 1, -1, -1)
    counts = np.bincount(samples @ weights, minlength=vocab ** length)
    return counts / counts.sum()


# -- exact divergences ---------------------------------------------------------------

def _kl(p: np.ndarray, q: np.ndarray, eps: float = ZERO_MASS) -> float:
    if np.any((p > eps) & (q <= eps)):
        return float("inf")
    mask = (p > 0) & (q > 0)
    return max(float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask])))), 0.0)


def divergence_from_joints(kind: str, p: np.ndarray, g: np.ndarray) -> float:
    if p.shape != g.shape:
        raise LabError(f"joint shapes differ: {p.shape} vs {g.shape}")
    if kind == "forward_kl":
        return _kl(p, g)
    if kind == "inverse_kl":
        return _kl(g, p)
    if kind == "jsd":
        m = 0.5 * (p + g)
        return min(0.5 * _kl(p, m, 0.0) + 0.5 * _kl(g, m, 0.0), float(np.log(2.0)))
    raise LabError(f"unknown divergence '{kind}'")


def exact_divergence(kind: str, target: TabularAR, model: TabularAR, ctx: int = 0) -> float:
    """KL(P||G), KL(G||P) or JSD(P||G) by summation over every sequence.

    KL values are ``inf`` when one side has mass above 1e-12 where the other has none.
    """
    if (target.V, target.T) != (model.V, model.T):
        raise LabError(f"models differ in shape: (V={target.V}, T={target.T}) vs (V={model.V}, T={model.T})")
    return divergence_from_joints(kind, target.joint(ctx), model.joint(ctx))


def exact_forward_perplexity(scorer: TabularAR, generator: TabularAR, ctx: int = 0) -> float:
    """``exp(-E_G[log H(Y)] / T)``, the limit of sampled forward perplexity."""
    g = generator.joint(ctx)
    with no_grad():
        log_h = scorer.log_joint(ctx).data
    return float(np.exp(-np.sum(g * log_h) / scorer.T))
