"""
Base command class for T2T commands.
"""
import argparse
from abc import ABC, abstractmethod
from argparse import ArgumentParser, _SubParsersAction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..config import RunConfig
from ..core.workspace import RunDir
from ..data.pipeline import Pipeline
from ..data.rdf import Record, parse_dataset
from ..data.vocab import EncodedExample, Vocab, load_encoded
from ..exceptions import ConfigError


def common_options() -> ArgumentParser:
    """Options every subcommand accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.FIELD=VALUE",
                        help="Override one configuration field (repeatable)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress messages")
    parser.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors")
    return parser


class BaseCommand(ABC):
    """Base class for all T2T commands."""

    # parsed-argument name -> "section.field" it overrides
    flag_overrides: Dict[str, str] = {}

    def __init__(self, config: RunConfig):
        self.config = config

    @classmethod
    @abstractmethod
    def register_parser(cls, subparsers: _SubParsersAction) -> ArgumentParser:
        """Register command parser with subparsers."""
        pass

    @abstractmethod
    def execute_from_args(self, args: Any) -> None:
        """Execute command from parsed arguments."""
        pass

    @classmethod
    def overrides(cls, args: Any) -> List[Tuple[str, Any]]:
        return [(key, getattr(args, dest)) for dest, key in cls.flag_overrides.items()
                if getattr(args, dest, None) is not None]

    # -- helpers shared by the model commands ---------------------------------

    def _dataset(self, path: Optional[str], field: str) -> List[Record]:
        if not path:
            raise ConfigError(field, "no dataset given")
        return parse_dataset(path)

    def _pipeline(self, vocabs: Optional[Tuple[Vocab, Vocab]] = None) -> Pipeline:
        model = self.config.model
        return Pipeline(self.config.pipeline, model.max_src_len, model.max_tgt_len, vocabs)

    def _encoded(self, pipeline: Pipeline, records: List[Record],
                 cache: Optional[str]) -> List[EncodedExample]:
        """Examples from a cache built with the pipeline's vocabulary, else freshly encoded."""
        if cache:
            return load_encoded(cache, pipeline.vocabs)
        return pipeline.prepare(records)

    def _output_dir(self, command: str, out: Optional[str]) -> RunDir:
        run = RunDir.create(self.config.paths.runs, command, out)
        run.init(self.config.to_dict())
        return run

    @staticmethod
    def _source_run(path: str) -> RunDir:
        run = Path(path)
        if run.is_file():
            run = run.parent.parent if run.parent.name == "checkpoints" else run.parent
        return RunDir(run).ensure_exists()

    def _adopt(self, run: RunDir) -> RunConfig:
        """Take the model and pipeline sections from the run that produced a checkpoint."""
        trained = RunConfig.from_dict(run.read_config())
        self.config.model = trained.model
        self.config.pipeline = trained.pipeline
        return trained
