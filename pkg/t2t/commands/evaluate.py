"""
Evaluate command implementation.
"""
import logging
from argparse import ArgumentParser, _SubParsersAction
from typing import Any, Optional

from ..core.rng import RandomStreams
from ..core.workspace import RunDir
from ..exceptions import ConfigError, VocabError
from ..metrics.likelihood import EvalLM
from ..metrics.report import MetricReport, corpus_evaluate
from ..training.trainer import load_generator
from .base import BaseCommand, common_options
from .generate import checkpoint_path

logger = logging.getLogger(__name__)


class EvaluateCommand(BaseCommand):
    """Score a trained generator on a dataset split."""

    flag_overrides = {
        "seed": "eval.seed",
        "decode": "eval.decode",
        "temperature": "eval.temperature",
        "eval_lm": "paths.eval_lm",
    }

    @classmethod
    def register_parser(cls, subparsers: _SubParsersAction) -> ArgumentParser:
        """Register evaluate command parser."""
        parser = subparsers.add_parser("evaluate", parents=[common_options()],
                                       help="Compute BLEU, TER, METEOR and optional likelihood metrics")
        parser.add_argument("checkpoint", help="Run directory or generator checkpoint file")
        parser.add_argument("dataset", nargs="?", help="JSON-lines split (default: paths.test)")
        parser.add_argument("--decode", choices=["greedy", "sample"], help="Decoding mode (eval.decode)")
        parser.add_argument("--temperature", type=float, help="Sampling temperature (eval.temperature)")
        parser.add_argument("--seed", type=int, help="Decoding and sampling seed (eval.seed)")
        parser.add_argument("--cache", help="Encoded dataset cache to use instead of encoding DATASET")
        parser.add_argument("--fppl", action="store_true", help="Report forward perplexity")
        parser.add_argument("--eval-lm", help="Trained evaluation model checkpoint (paths.eval_lm)")
        parser.add_argument("--train-eval-lm", action="store_true",
                            help="Train the evaluation model on paths.train when none is given")
        parser.add_argument("--judger", action="store_true", help="Report judger perplexity of the outputs")
        parser.add_argument("--predicates", action="store_true", help="Report predicate accuracy")
        parser.add_argument("--out", help="Output directory (default: a new run directory)")
        return parser

    def execute_from_args(self, args: Any) -> None:
        """Execute evaluate command from parsed arguments."""
        self.execute(args.checkpoint, args.dataset, args.cache, args.out, args.fppl,
                     args.train_eval_lm, args.judger, args.predicates, progress=not args.quiet)

    def execute(self, checkpoint: str, dataset: Optional[str] = None, cache: Optional[str] = None,
                out: Optional[str] = None, fppl: bool = False, train_eval_lm: bool = False,
                judger: bool = False, predicates: bool = False, progress: bool = False) -> MetricReport:
        run = self._source_run(checkpoint)
        self._adopt(run)
        vocabs = run.load_vocabs()
        generator = load_generator(checkpoint_path(checkpoint, run.generator_checkpoint))
        if generator.vocab_size != len(vocabs[1]):
            raise VocabError(f"checkpoint has {generator.vocab_size} target tokens, "
                             f"vocab.json has {len(vocabs[1])}")
        pipeline = self._pipeline(vocabs)
        records = self._dataset(dataset or self.config.paths.test, "paths.test")
        examples = self._encoded(pipeline, records, cache)
        target = self._output_dir("evaluate", out)
        eval_lm = self._eval_lm(pipeline, target, train_eval_lm, progress) if fppl else None
        judger_model = load_generator(run.judger_checkpoint) if judger else None
        return self._report(generator, examples, pipeline, judger_model, eval_lm,
                            records if predicates else None, target)

    def _report(self, generator, examples, pipeline, judger, eval_lm, records, target: RunDir) -> MetricReport:
        report = corpus_evaluate(generator, examples, pipeline, self.config.eval, judger, eval_lm,
                                 records, target.path)
        for name, value in report.rows():
            print(f"{name:20s} {value}")
        print(f"Wrote report to {target.path / 'report.json'}")
        return report

    def _eval_lm(self, pipeline, target: RunDir, train: bool, progress: bool) -> EvalLM:
        """The configured evaluation model, or one trained on ``paths.train`` when asked to."""
        cfg = self.config
        if cfg.paths.eval_lm:
            eval_lm = EvalLM.load(cfg.paths.eval_lm)
        elif train:
            records = self._dataset(cfg.paths.train, "paths.train")
            examples = pipeline.prepare(records)
            model_cfg = EvalLM.model_config(cfg.model, cfg.eval.eval_lm_embed_dim, cfg.eval.eval_lm_hidden_dim)
            streams = RandomStreams(cfg.seed)
            eval_lm = EvalLM.create(model_cfg, streams["eval"])
            eval_lm.fit(examples, cfg.eval.eval_lm_epochs, cfg.training.batch_size, cfg.training.lr,
                        streams["eval"], progress)
            eval_lm.save(target.eval_lm_checkpoint)
            logger.info("Saved evaluation model to %s", target.eval_lm_checkpoint)
        else:
            raise ConfigError("paths.eval_lm", "--fppl needs an evaluation model; pass --eval-lm or --train-eval-lm")
        if not eval_lm.trained:
            raise ConfigError("paths.eval_lm", f"{cfg.paths.eval_lm} holds an untrained evaluation model")
        return eval_lm
