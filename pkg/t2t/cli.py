"""
Command Line Interface for T2T.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from .config import RunConfig, apply_overrides
from .commands import (
    EvaluateCommand, GenerateCommand, IngestWebNLGCommand, LabCommand, MakeCorpusCommand, TrainCommand
)
from .exceptions import ConfigError, T2TError

logger = logging.getLogger(__name__)

COMMANDS = {
    "train": TrainCommand,
    "generate": GenerateCommand,
    "evaluate": EvaluateCommand,
    "lab": LabCommand,
    "make-corpus": MakeCorpusCommand,
    "ingest-webnlg": IngestWebNLGCommand,
}


class CustomHelpFormatter(argparse.RawDescriptionHelpFormatter):
    """Custom formatter that suppresses subcommand help in main help."""
    def _format_action(self, action):
        if isinstance(action, argparse._SubParsersAction):
            return ''
        return super()._format_action(action)


def create_parser() -> argparse.ArgumentParser:
    """Create the main argument parser."""
    parser = argparse.ArgumentParser(
        description="T2T - sentence generation from RDF triples",
        prog="t2t",
        formatter_class=CustomHelpFormatter,
        epilog="""These are the T2T commands:

prepare data
   make-corpus    Generate a synthetic (triples, sentence) corpus
   ingest-webnlg  Convert WebNLG XML to JSON-lines

train and use a generator
   train          Train a generator with mle or t2t
   generate       Generate sentences from a trained checkpoint
   evaluate       Compute BLEU, TER, METEOR and likelihood metrics

study the objectives
   lab            Fit tabular models under forward KL, inverse KL and JSD

See 't2t <command> --help' to read about a specific command."""
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__import__('t2t').__version__}"
    )
    subparsers = parser.add_subparsers(
        dest="command",
        help="T2T command to run (see command list below)",
        metavar="<command>"
    )
    for command_class in COMMANDS.values():
        command_class.register_parser(subparsers)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.INFO if verbose and not quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def build_config(args: argparse.Namespace) -> RunConfig:
    """``--config`` file, then ``--set`` overrides, then the command's dedicated flags."""
    config = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    assignments = list(getattr(args, "set", None) or [])
    for key, value in COMMANDS[args.command].overrides(args):
        assignments.append(f"{key}={json.dumps(value)}")
    return apply_overrides(config, assignments) if assignments else config.validate()


def main(argv: Optional[List[str]] = None) -> None:
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return

    configure_logging(args.verbose, args.quiet)
    try:
        config = build_config(args)
        command = COMMANDS[args.command](config)
        command.execute_from_args(args)
    except ConfigError as e:
        print(f"fatal: {e}", file=sys.stderr)
        sys.exit(2)
    except T2TError as e:
        print(f"fatal: {e}", file=sys.stderr)
        sys.exit(1)
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        sys.exit(130)
    except Exception as e:
        logger.debug("Unexpected error", exc_info=True)
        print(f"fatal: unexpected error: {e}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
