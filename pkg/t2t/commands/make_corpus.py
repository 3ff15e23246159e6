"""
Make-corpus command implementation.
"""
from argparse import ArgumentParser, _SubParsersAction
from typing import Any, Dict, List

from ..core.storage import read_json
from ..core.workspace import RunDir
from ..data.corpus import MiniCorpusSpec, make_mini_corpus, predicate_counts, separable_spec, write_mini_corpus
from ..data.rdf import Record
from ..exceptions import CheckpointError, ConfigError
from .base import BaseCommand, common_options


class MakeCorpusCommand(BaseCommand):
    """Write a synthetic template corpus as JSON-lines splits."""

    @classmethod
    def register_parser(cls, subparsers: _SubParsersAction) -> ArgumentParser:
        """Register make-corpus command parser."""
        parser = subparsers.add_parser("make-corpus", parents=[common_options()],
                                       help="Generate a synthetic (triples, sentence) corpus")
        parser.add_argument("out", help="Output directory for train/valid/test .jsonl files")
        parser.add_argument("--spec", help="JSON corpus specification")
        parser.add_argument("--separable", action="store_true",
                            help="Five predicates, one triple and one template each")
        parser.add_argument("--seed", type=int, help="Corpus seed (default: training.seed)")
        parser.add_argument("--train", type=int, help="Training records")
        parser.add_argument("--valid", type=int, help="Validation records")
        parser.add_argument("--test", type=int, help="Test records")
        return parser

    def execute_from_args(self, args: Any) -> None:
        """Execute make-corpus command from parsed arguments."""
        if args.spec and args.separable:
            raise ConfigError("corpus", "--spec and --separable are mutually exclusive")
        if args.spec:
            try:
                spec = MiniCorpusSpec.from_dict(read_json(args.spec))
            except CheckpointError as e:
                raise ConfigError("corpus", str(e))
        else:
            spec = separable_spec() if args.separable else MiniCorpusSpec()
        for name in ("train", "valid", "test"):
            if getattr(args, name) is not None:
                setattr(spec, name, getattr(args, name))
        seed = args.seed if args.seed is not None else self.config.seed
        self.execute(spec, args.out, seed)

    def execute(self, spec: MiniCorpusSpec, out: str, seed: int = 0) -> Dict[str, List[Record]]:
        splits = make_mini_corpus(spec, seed)
        run = RunDir.create(self.config.paths.runs, "corpus", out)
        run.init({"seed": seed, "corpus": spec.to_dict()})
        for path in write_mini_corpus(run.path, splits):
            print(f"Wrote {path}")
        counts = predicate_counts(splits["train"])
        print("Training predicate counts: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
        return splits
