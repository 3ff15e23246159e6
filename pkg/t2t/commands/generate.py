"""
Generate command implementation.
"""
from argparse import ArgumentParser, _SubParsersAction
from pathlib import Path
from typing import Any, List, Optional

from ..core.storage import atomic_write_text
from ..exceptions import VocabError
from ..metrics.report import decode_split
from ..training.trainer import load_generator
from .base import BaseCommand, common_options


def checkpoint_path(source: str, default: Path) -> Path:
    path = Path(source)
    return path if path.is_file() else default


class GenerateCommand(BaseCommand):
    """Write one relexicalized sentence per input record."""

    flag_overrides = {
        "seed": "eval.seed",
        "decode": "eval.decode",
        "temperature": "eval.temperature",
    }

    @classmethod
    def register_parser(cls, subparsers: _SubParsersAction) -> ArgumentParser:
        """Register generate command parser."""
        parser = subparsers.add_parser("generate", parents=[common_options()],
                                       help="Generate sentences from a trained checkpoint")
        parser.add_argument("checkpoint", help="Run directory or generator checkpoint file")
        parser.add_argument("input", help="JSON-lines dataset to generate from")
        parser.add_argument("--decode", choices=["greedy", "sample"], help="Decoding mode (eval.decode)")
        parser.add_argument("--temperature", type=float, help="Sampling temperature (eval.temperature)")
        parser.add_argument("--seed", type=int, help="Sampling seed (eval.seed)")
        parser.add_argument("--cache", help="Encoded dataset cache to use instead of encoding INPUT")
        parser.add_argument("--out", help="Output directory (default: a new run directory)")
        return parser

    def execute_from_args(self, args: Any) -> None:
        """Execute generate command from parsed arguments."""
        self.execute(args.checkpoint, args.input, args.cache, args.out)

    def execute(self, checkpoint: str, input_path: str, cache: Optional[str] = None,
                out: Optional[str] = None) -> List[str]:
        run = self._source_run(checkpoint)
        self._adopt(run)
        vocabs = run.load_vocabs()
        generator = load_generator(checkpoint_path(checkpoint, run.generator_checkpoint))
        if generator.vocab_size != len(vocabs[1]):
            raise VocabError(f"checkpoint has {generator.vocab_size} target tokens, "
                             f"vocab.json has {len(vocabs[1])}")
        pipeline = self._pipeline(vocabs)
        records = self._dataset(input_path, "input")
        examples = self._encoded(pipeline, records, cache)
        cfg = self.config.eval
        seed = cfg.seed if cfg.seed is not None else 0
        generated = decode_split(generator, examples, cfg.decode, cfg.temperature, seed)
        outputs = [pipeline.decode_target(ids, e.entity_map) for ids, e in zip(generated, examples)]
        target = self._output_dir("generate", out)
        atomic_write_text(target.path / "outputs.txt", "".join(o + "\n" for o in outputs))
        print(f"Wrote {len(outputs)} sentences to {target.path / 'outputs.txt'}")
        return outputs
