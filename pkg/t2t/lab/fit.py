"""
Fitting capacity-limited tabular models to a target under forward KL,
inverse KL (through an MLE-estimated judger) and JSD.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from ..core.params import ParameterStore
from ..core.tensor import (
    Tensor,
    add,
    constant,
    exp,
    log,
    mul,
    no_grad,
    reduce_sum,
    scalar_mul,
    sub,
)
from ..exceptions import LabError, NumericalError
from ..training.objectives import optimise
from .tabular import LOG_FLOOR, TabularAR, all_sequences, divergence_from_joints, empirical_joint

logger = logging.getLogger(__name__)

OBJECTIVES = ("forward_kl_mle", "inverse_kl_vs_judger", "jsd_mixture")


@dataclass
class Capacity:
    """Shape of the fitted model; ``context="none"`` is a product of per-step marginals."""
    context: str = "none"
    rank: Optional[int] = None
    tied: bool = False


@dataclass
class CurvePoint:
    step: int
    forward_kl: float
    inverse_kl: float
    jsd: float
    objective_value: float


@dataclass
class FitResult:
    objective: str
    seed: int
    model: TabularAR
    curve: List[CurvePoint] = field(default_factory=list)
    judger: Optional[TabularAR] = None


@dataclass
class PlantedTarget:
    """A target with high-mass sequence clusters and a small uniform floor."""
    model: TabularAR
    joint: np.ndarray
    cluster_of: np.ndarray
    junk: np.ndarray
    modes: np.ndarray

    @property
    def clusters(self) -> int:
        return int(self.cluster_of.max()) + 1


def planted_target(vocab: int = 4, length: int = 3,
                   clusters: Sequence[Sequence[int]] = ((0, 1), (2, 3)),
                   floor: float = 1e-3, junk_threshold: float = 1e-4,
                   rng: Optional[np.random.Generator] = None) -> PlantedTarget:
    """Mass spread over ``cluster^T`` for every cluster of tokens, plus ``floor`` mass everywhere.

    Cluster weights are equal; the split within a cluster is uniform, or a
    Dirichlet draw when ``rng`` is given. Sequences mixing clusters get only
    ``floor / V^T`` and count as junk below ``junk_threshold``.
    """
    if not 0 < floor < 1:
        raise LabError("floor must lie in (0, 1)")
    seqs = all_sequences(vocab, length)
    cluster_of = np.full(len(seqs), -1, dtype=np.int64)
    for c, tokens in enumerate(clusters):
        if any(not 0 <= tok < vocab for tok in tokens):
            raise LabError(f"cluster {c} uses tokens outside the vocabulary")
        inside = np.all(np.isin(seqs, list(tokens)), axis=1)
        if np.any(cluster_of[inside] >= 0):
            raise LabError("clusters overlap")
        cluster_of[inside] = c
    planted = np.zeros(len(seqs))
    for c in range(len(clusters)):
        members = np.flatnonzero(cluster_of == c)
        split = rng.dirichlet(np.full(len(members), 5.0)) if rng is not None else np.full(len(members), 1.0 / len(members))
        planted[members] = split / len(clusters)
    joint = (1.0 - floor) * planted + floor / len(seqs)
    high = int(np.sum(cluster_of >= 0))
    modes = joint >= 1.0 / (2 * high)
    return PlantedTarget(TabularAR.from_joint(joint, vocab, length), joint, cluster_of,
                         joint < junk_threshold, modes)


def judger_from_samples(samples: np.ndarray, vocab: int, length: int, smoothing: float = 1e-3) -> TabularAR:
    """Closed-form MLE of a full-context table with additive smoothing of every conditional."""
    samples = np.asarray(samples, dtype=np.int64).reshape(-1, length)
    if len(samples) == 0:
        raise LabError("cannot fit a judger on zero samples")
    store = ParameterStore(role="judger")
    prefix_idx = np.zeros(len(samples), dtype=np.int64)
    for t in range(length):
        counts = np.zeros((vocab ** t, vocab))
        np.add.at(counts, (prefix_idx, samples[:, t]), 1.0)
        cond = (counts + smoothing) / (counts.sum(axis=1, keepdims=True) + vocab * smoothing)
        store.add(f"step{t}.logits", np.log(np.maximum(cond, LOG_FLOOR)))
        prefix_idx = prefix_idx * vocab + samples[:, t]
    return TabularAR(vocab, length, store, "full")


def _objective(kind: str, model: TabularAR, p: np.ndarray, log_m: Optional[np.ndarray]) -> Tensor:
    log_g = model.log_joint()
    if kind == "forward_kl_mle":
        safe = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
        return reduce_sum(mul(constant(p), sub(constant(safe), log_g)))
    g = exp(log_g)
    if kind == "inverse_kl_vs_judger":
        return reduce_sum(mul(g, sub(log_g, constant(log_m))))
    if kind == "jsd_mixture":
        log_mix = log(scalar_mul(add(constant(p), g), 0.5))
        safe = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
        kl_p = reduce_sum(mul(constant(p), sub(constant(safe), log_mix)))
        kl_g = reduce_sum(mul(g, sub(log_g, log_mix)))
        return scalar_mul(add(kl_p, kl_g), 0.5)
    raise LabError(f"unknown objective '{kind}'")


def _point(step: int, p: np.ndarray, model: TabularAR, value: float) -> CurvePoint:
    g = model.joint()
    return CurvePoint(step, divergence_from_joints("forward_kl", p, g),
                      divergence_from_joints("inverse_kl", p, g), divergence_from_joints("jsd", p, g), value)


def fit_tabular(kind: str, target: Union[TabularAR, np.ndarray], capacity: Capacity, steps: int = 500,
                seed: int = 0, lr: float = 0.05, vocab: Optional[int] = None, length: Optional[int] = None,
                judger_samples: int = 10000, judger_smoothing: float = 1e-3, record_every: int = 10,
                init_scale: float = 1.0) -> FitResult:
    """Adam on the logits of a fresh model of ``capacity`` under objective ``kind``.

    ``target`` is either an exact model or an ``[n, T]`` array of samples whose
    empirical distribution becomes the target. The inverse-KL objective first
    estimates a judger from samples of the target, then minimises exact
    KL(G || judger).
    """
    if kind not in OBJECTIVES:
        raise LabError(f"objective must be one of {OBJECTIVES}")
    rng = np.random.default_rng([seed, 7])
    if isinstance(target, TabularAR):
        vocab, length = target.V, target.T
        p = target.joint()
        samples = None
    else:
        if vocab is None or length is None:
            raise LabError("a sample-set target needs vocab and length")
        samples = np.asarray(target, dtype=np.int64).reshape(-1, length)
        p = empirical_joint(samples, vocab, length)
    judger = None
    log_m = None
    if kind == "inverse_kl_vs_judger":
        if samples is None:
            samples = np.asarray(target.sample(judger_samples, rng), dtype=np.int64)
        judger = judger_from_samples(samples, vocab, length, judger_smoothing)
        with no_grad():
            log_m = judger.log_joint().data
    model = TabularAR.create(vocab, length, np.random.default_rng([seed, 11]), capacity.context,
                             capacity.rank, 1, capacity.tied, init_scale, role=kind)
    result = FitResult(kind, seed, model, judger=judger)
    with no_grad():
        initial = _objective(kind, model, p, log_m).item()
    result.curve.append(_point(0, p, model, initial))
    for step in range(1, steps + 1):
        try:
            value = optimise(model, lambda: _objective(kind, model, p, log_m), lr)
        except NumericalError as e:
            raise LabError(f"{kind} fit diverged at step {step}: {e}")
        if not np.isfinite(value):
            raise LabError(f"{kind} produced a non-finite loss at step {step}")
        if step % record_every == 0 or step == steps:
            with no_grad():
                current = _objective(kind, model, p, log_m).item()
            result.curve.append(_point(step, p, model, current))
    logger.info("%s seed %d: objective %.4f -> %.4f", kind, seed, initial, result.curve[-1].objective_value)
    return result


def cluster_masses(joint: np.ndarray, cluster_of: np.ndarray) -> List[float]:
    return [float(joint[cluster_of == c].sum()) for c in range(int(cluster_of.max()) + 1)]


def summarize_fit(result: FitResult, target: PlantedTarget, coverage: float = 0.1) -> dict:
    """Divergences, per-cluster mass, coverage and junk mass of a fitted model."""
    g = result.model.joint()
    p = target.joint
    masses = cluster_masses(g, target.cluster_of)
    tau = 1.0 / (2 * int(np.sum(target.cluster_of >= 0)))
    return {
        "objective": result.objective,
        "seed": result.seed,
        "forward_kl": divergence_from_joints("forward_kl", p, g),
        "inverse_kl": divergence_from_joints("inverse_kl", p, g),
        "jsd": divergence_from_joints("jsd", p, g),
        "cluster_mass": masses,
        "clusters_covered": sum(1 for m in masses if m >= coverage),
        "modes_covered": int(np.sum(target.modes & (g >= tau))),
        "max_cluster_mass": max(masses),
        "junk_mass": float(g[target.junk].sum()),
        "initial_objective": result.curve[0].objective_value,
        "final_objective": result.curve[-1].objective_value,
    }
