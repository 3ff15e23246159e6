"""
Objectives and training loops.
"""
from .trainer import Trainer, TrainState
__all__ = ["Trainer", "TrainState"]
