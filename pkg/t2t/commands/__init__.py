"""
T2T command implementations.
"""
from .base import BaseCommand
from .train import TrainCommand
from .generate import GenerateCommand
from .evaluate import EvaluateCommand
from .lab import LabCommand
from .make_corpus import MakeCorpusCommand
from .ingest_webnlg import IngestWebNLGCommand
__all__ = [
    "BaseCommand",
    "TrainCommand",
    "GenerateCommand",
    "EvaluateCommand",
    "LabCommand",
    "MakeCorpusCommand",
    "IngestWebNLGCommand",
]
