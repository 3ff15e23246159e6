"""
Training loops: MLE baseline and the alternating judger/generator loop.

One round of the alternating loop takes ``m`` Adam steps on the judger
(maximum likelihood on real pairs) followed by ``g`` Adam steps on the
generator (inverse KL against the frozen judger on sampled contexts). Both
loops can be checkpointed after any round and resumed bit-identically.
"""
import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from ..config import TrainingConfig
from ..core.params import ParameterStore
from ..core.rng import RandomStreams
from ..core.storage import atomic_write_text, read_json, write_json
from ..core.tensor import no_grad
from ..data.batch import collate
from ..data.vocab import EncodedExample, to_batch
from ..exceptions import CheckpointError, DatasetError
from ..model.config import ModelConfig
from ..model.seq2seq import Seq2Seq
from .objectives import inverse_kl_loss, judger_update, mle_loss, optimise
from .sampler import BatchSampler

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("round", "mle_loss", "judger_loss", "ikl_loss", "val_fppl", "wall_time")


def fit_mle(model, examples: Sequence[EncodedExample], epochs: int, batch_size: int, lr: float,
            rng: np.random.Generator, desc: str = "mle", progress: bool = False) -> List[float]:
    """Plain epoch loop of MLE Adam steps; returns the mean loss of each epoch."""
    if not examples:
        raise DatasetError("cannot train on an empty dataset")
    sampler = BatchSampler(len(examples), batch_size, rng)
    means = []
    for epoch in range(epochs):
        losses = []
        for rows in tqdm(sampler.epoch_batches(), desc=f"{desc} epoch {epoch + 1}", leave=False,
                         disable=not progress):
            batch = to_batch([examples[r] for r in rows])
            losses.append(optimise(model, lambda: mle_loss(model, batch), lr))
        means.append(float(np.mean(losses)))
        logger.info("%s epoch %d: loss %.4f", desc, epoch + 1, means[-1])
    return means


@dataclass
class TrainState:
    """Counters and history of one training run (parameters live in the stores)."""
    method: str = "t2t"
    round: int = 0
    judger_steps: int = 0
    generator_steps: int = 0
    pretrain_steps: int = 0
    judger_pretrain_steps: int = 0
    pretrained: bool = False
    best_fppl: Optional[float] = None
    bad_evals: int = 0
    converged: bool = False
    history: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainState":
        return cls(**data)


class Trainer:
    """Owns the generator and judger stores and every random stream of a run."""

    def __init__(self, config: TrainingConfig, model_config: ModelConfig,
                 train: Sequence[EncodedExample], valid: Optional[Sequence[EncodedExample]] = None,
                 eval_lm=None, run_dir: Optional[Union[str, Path]] = None, progress: bool = False):
        self.config = config.validate()
        self.model_config = model_config.validate()
        if len(train) < config.batch_size:
            raise DatasetError(
                f"training set has {len(train)} examples, fewer than one batch of {config.batch_size}"
            )
        self.train = list(train)
        self.valid = list(valid or [])
        self.eval_lm = eval_lm
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.progress = progress
        self.streams = RandomStreams(config.seed)
        self.generator = Seq2Seq.create(model_config, self.streams["init"], role="generator")
        self.judger = Seq2Seq.create(model_config, self.streams["judger-init"], role="judger")
        shuffle = self.streams["data-shuffle"]
        self.real_sampler = BatchSampler(len(self.train), config.batch_size, shuffle)
        self.context_sampler = BatchSampler(len(self.train), config.batch_size, shuffle)
        self.state = TrainState()
        self._started = time.perf_counter()

    @property
    def max_sample_len(self) -> int:
        if self.config.max_sample_len is None:
            return self.model_config.max_tgt_len
        return self.config.max_sample_len

    def _real_batch(self, sampler: BatchSampler):
        return to_batch([self.train[r] for r in sampler.next()])

    # -- pretraining ------------------------------------------------------------

    def _mle_epochs(self, model: Seq2Seq, epochs: int, desc: str) -> int:
        steps = 0
        for epoch in range(epochs):
            losses = []
            for rows in self.real_sampler.epoch_batches():
                batch = to_batch([self.train[r] for r in rows])
                losses.append(optimise(model, lambda: mle_loss(model, batch), self.config.lr))
                steps += 1
            logger.info("%s pretraining epoch %d: loss %.4f", desc, epoch + 1, float(np.mean(losses)))
        return steps

    def pretrain(self) -> None:
        """Optional MLE epochs for the generator and, if configured, the judger."""
        if self.state.pretrained:
            return
        self.state.pretrain_steps = self._mle_epochs(self.generator, self.config.pretrain_epochs, "generator")
        self.state.judger_pretrain_steps = self._mle_epochs(
            self.judger, self.config.judger_pretrain_epochs, "judger"
        )
        self.state.pretrained = True

    # -- rounds -----------------------------------------------------------------

    def judger_round(self) -> float:
        losses = []
        for _ in range(self.config.m):
            losses.append(judger_update(self.judger, self._real_batch(self.real_sampler), self.config.lr))
            self.state.judger_steps += 1
        return float(np.mean(losses))

    def generator_round(self) -> float:
        cfg = self.config
        losses = []
        for _ in range(cfg.g):
            rows = self.context_sampler.next()
            contexts = collate([self.train[r].src for r in rows])
            losses.append(optimise(
                self.generator,
                lambda: inverse_kl_loss(
                    self.generator, self.judger, contexts, cfg.grad_estimator, cfg.ikl_normalize,
                    cfg.temperature, self.max_sample_len, self.streams["sampling"],
                ),
                cfg.lr,
            ))
            self.state.generator_steps += 1
        return float(np.mean(losses))

    def mle_round(self) -> float:
        losses = []
        for _ in range(self.config.g):
            batch = self._real_batch(self.real_sampler)
            losses.append(optimise(self.generator, lambda: mle_loss(self.generator, batch), self.config.lr))
            self.state.generator_steps += 1
        return float(np.mean(losses))

    # -- validation -------------------------------------------------------------

    def validation_fppl(self) -> Optional[float]:
        if self.eval_lm is None or not self.valid:
            return None
        from ..metrics.likelihood import forward_perplexity
        rng = np.random.default_rng([self.config.seed, self.state.round])
        return forward_perplexity(
            self.eval_lm, self.generator, [e.src for e in self.valid], 1, rng,
            max_len=self.max_sample_len, batch_size=self.config.batch_size,
        )

    def _check_convergence(self, fppl: Optional[float]) -> bool:
        if fppl is None:
            return False
        if self.state.best_fppl is None or fppl < self.state.best_fppl:
            self.state.best_fppl = fppl
            self.state.bad_evals = 0
            return False
        self.state.bad_evals += 1
        return self.state.bad_evals >= self.config.patience

    def _training_mle(self) -> float:
        rows = list(range(min(len(self.train), self.config.batch_size)))
        with no_grad():
            return mle_loss(self.generator, to_batch([self.train[r] for r in rows])).item()

    # -- main loops ---------------------------------------------------------------

    def fit(self, method: str = "t2t") -> TrainState:
        """Run ``t2t`` or ``mle`` training until ``max_rounds`` or validation patience runs out."""
        if method not in ("t2t", "mle"):
            raise ValueError(f"unknown training method '{method}'")
        self.state.method = method
        self.pretrain()
        cfg = self.config
        rounds = range(self.state.round, cfg.max_rounds)
        for _ in tqdm(rounds, desc=method, disable=not self.progress, initial=self.state.round,
                      total=cfg.max_rounds):
            if self.state.converged:
                break
            row: Dict[str, Any] = {"round": self.state.round + 1}
            if method == "t2t":
                row["judger_loss"] = self.judger_round()
                row["ikl_loss"] = self.generator_round()
            else:
                row["mle_loss"] = self.mle_round()
            self.state.round += 1
            if self.state.round % cfg.eval_every == 0 or self.state.round == cfg.max_rounds:
                if method == "t2t":
                    row["mle_loss"] = self._training_mle()
                fppl = self.validation_fppl()
                row["val_fppl"] = fppl
                if self._check_convergence(fppl):
                    logger.info("Validation perplexity stalled for %d evaluations; stopping at round %d",
                                cfg.patience, self.state.round)
                    self.state.converged = True
            row["wall_time"] = round(time.perf_counter() - self._started, 3)
            self.state.history.append(row)
            if cfg.checkpoint_every and self.state.round % cfg.checkpoint_every == 0 and self.run_dir:
                self.save(self.run_dir)
        if self.run_dir is not None:
            self.save(self.run_dir)
        logger.info("%s training finished after %d rounds (%d judger / %d generator steps)",
                    method, self.state.round, self.state.judger_steps, self.state.generator_steps)
        return self.state

    def t2t_train(self) -> TrainState:
        return self.fit("t2t")

    def mle_train(self) -> TrainState:
        """MLE baseline with the same generator update budget as ``t2t_train``."""
        return self.fit("mle")

    # -- persistence --------------------------------------------------------------

    def _meta(self, role: str) -> Dict[str, Any]:
        return {"role": role, "model": self.model_config.to_dict(), "round": self.state.round}

    def save(self, run_dir: Union[str, Path]) -> None:
        ckpt = Path(run_dir) / "checkpoints"
        self.generator.store.save(ckpt / "generator.json", self._meta("generator"))
        self.judger.store.save(ckpt / "judger.json", self._meta("judger"))
        write_json(ckpt / "state.json", {
            "state": self.state.to_dict(),
            "streams": self.streams.state(),
            "samplers": {
                "real": self.real_sampler.state(),
                "context": self.context_sampler.state(),
            },
        })
        write_metrics(Path(run_dir) / "metrics.csv", self.state.history)

    def restore(self, run_dir: Union[str, Path]) -> None:
        """Continue from the checkpoints of ``run_dir``."""
        ckpt = Path(run_dir) / "checkpoints"
        doc = read_json(ckpt / "state.json")
        try:
            self.generator = Seq2Seq(self.model_config, ParameterStore.load(ckpt / "generator.json"))
            self.judger = Seq2Seq(self.model_config, ParameterStore.load(ckpt / "judger.json"))
            self.state = TrainState.from_dict(doc["state"])
            self.streams.restore(doc["streams"])
            self.real_sampler.restore(doc["samplers"]["real"])
            self.context_sampler.restore(doc["samplers"]["context"])
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"cannot resume from {run_dir}: {e}")
        logger.info("Resumed %s run at round %d", self.state.method, self.state.round)


def load_generator(path: Union[str, Path]) -> Seq2Seq:
    """Rebuild a model from a checkpoint written by ``Trainer.save``."""
    doc = read_json(path)
    meta = doc.get("meta") or {}
    if "model" not in meta:
        raise CheckpointError(f"{path} does not record its model configuration")
    return Seq2Seq(ModelConfig.from_dict(meta["model"]), ParameterStore.from_dict(doc))


def write_metrics(path: Union[str, Path], history: Sequence[Dict[str, Any]]) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=METRICS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in history:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in METRICS_COLUMNS})
    atomic_write_text(path, buf.getvalue())
