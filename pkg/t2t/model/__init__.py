"""
Encoder-decoder models and model-agnostic decoding.
"""
from .config import ModelConfig
from .seq2seq import Seq2Seq
__all__ = ["ModelConfig", "Seq2Seq"]
