"""
Ingest-webnlg command implementation.
"""
from argparse import ArgumentParser, _SubParsersAction
from typing import Any, List

from ..core.workspace import RunDir
from ..data.rdf import Record, write_dataset
from ..data.webnlg import read_webnlg
from ..exceptions import DatasetError
from .base import BaseCommand, common_options


class IngestWebNLGCommand(BaseCommand):
    """Convert WebNLG XML files into a JSON-lines dataset."""

    @classmethod
    def register_parser(cls, subparsers: _SubParsersAction) -> ArgumentParser:
        """Register ingest-webnlg command parser."""
        parser = subparsers.add_parser("ingest-webnlg", parents=[common_options()],
                                       help="Convert WebNLG XML to JSON-lines (best effort)")
        parser.add_argument("inputs", nargs="+", help="XML files or directories")
        parser.add_argument("--out", required=True, help="Output directory")
        parser.add_argument("--split", default="train", help="Name of the written split (default: train)")
        return parser

    def execute_from_args(self, args: Any) -> None:
        """Execute ingest-webnlg command from parsed arguments."""
        self.execute(args.inputs, args.out, args.split)

    def execute(self, inputs: List[str], out: str, split: str = "train") -> List[Record]:
        records = read_webnlg(inputs)
        if not records:
            raise DatasetError("no usable WebNLG entries found")
        run = RunDir.create(self.config.paths.runs, "ingest", out)
        run.init({"inputs": [str(p) for p in inputs], "split": split})
        path = run.path / f"{split}.jsonl"
        write_dataset(path, records)
        print(f"Wrote {len(records)} records to {path}")
        return records
