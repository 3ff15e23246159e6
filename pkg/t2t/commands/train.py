"""
Train command implementation.
"""
import logging
from argparse import ArgumentParser, _SubParsersAction
from typing import Any, Optional

from ..config import RunConfig
from ..core.rng import RandomStreams
from ..core.storage import write_json
from ..core.workspace import RunDir
from ..data.vocab import load_encoded, save_encoded
from ..metrics.likelihood import EvalLM
from ..training.trainer import Trainer
from .base import BaseCommand, common_options

logger = logging.getLogger(__name__)


class TrainCommand(BaseCommand):
    """Train a generator with maximum likelihood or the judger/generator loop."""

    flag_overrides = {
        "seed": "training.seed",
        "m": "training.m",
        "g": "training.g",
        "max_rounds": "training.max_rounds",
    }

    @classmethod
    def register_parser(cls, subparsers: _SubParsersAction) -> ArgumentParser:
        """Register train command parser."""
        parser = subparsers.add_parser("train", parents=[common_options()],
                                       help="Train a generator (mle or t2t)")
        parser.add_argument("method", choices=["mle", "t2t"], help="Training objective")
        parser.add_argument("--run-dir", help="Write into this directory instead of a new timestamped one")
        parser.add_argument("--resume", metavar="RUN_DIR", help="Continue a run from its last checkpoint")
        parser.add_argument("--seed", type=int, help="Run seed (training.seed)")
        parser.add_argument("--m", type=int, help="Judger steps per round (training.m)")
        parser.add_argument("--g", type=int, help="Generator steps per round (training.g)")
        parser.add_argument("--max-rounds", type=int, help="Round limit (training.max_rounds)")
        return parser

    def execute_from_args(self, args: Any) -> None:
        """Execute train command from parsed arguments."""
        self.execute(args.method, args.run_dir, args.resume, progress=not args.quiet)

    def execute(self, method: str, run_dir: Optional[str] = None, resume: Optional[str] = None,
                progress: bool = False) -> RunDir:
        if resume:
            run = RunDir(resume).ensure_exists()
            self.config = RunConfig.from_dict(run.read_config())
            vocabs = run.load_vocabs()
            train = load_encoded(run.cache_file("train"), vocabs)
            valid = load_encoded(run.cache_file("valid"), vocabs) if run.cache_file("valid").exists() else []
        else:
            run, train, valid = self._prepare(method, run_dir)
        eval_lm = EvalLM.load(self.config.paths.eval_lm) if self.config.paths.eval_lm else None
        trainer = Trainer(self.config.training, self.config.model, train, valid, eval_lm, run.path, progress)
        if resume:
            trainer.restore(run.path)
        state = trainer.fit(method)
        print(f"Trained {method} for {state.round} rounds "
              f"({state.judger_steps} judger / {state.generator_steps} generator steps)")
        print(f"Checkpoints in {run.checkpoints_dir}")
        return run

    def _prepare(self, method: str, run_dir: Optional[str]):
        cfg = self.config
        records = self._dataset(cfg.paths.train, "paths.train")
        pipeline = self._pipeline()
        vocabs = pipeline.fit_vocab(records)
        cfg.model.vocab_src, cfg.model.vocab_tgt = len(vocabs[0]), len(vocabs[1])
        cfg.validate()
        augment = RandomStreams(cfg.seed)["augment"]
        train = pipeline.prepare(records, augment=cfg.pipeline.max_perms > 1, rng=augment)
        valid = pipeline.prepare(self._dataset(cfg.paths.valid, "paths.valid")) if cfg.paths.valid else []
        run = RunDir.create(cfg.paths.runs, f"train-{method}", run_dir).init(cfg.to_dict())
        run.save_vocabs(vocabs)
        write_json(run.model_file, cfg.model.to_dict(), pretty=True)
        save_encoded(run.cache_file("train"), train, vocabs)
        if valid:
            save_encoded(run.cache_file("valid"), valid, vocabs)
        logger.info("Vocabularies: %d source / %d target tokens; %d training examples",
                    len(vocabs[0]), len(vocabs[1]), len(train))
        return run, train, valid
