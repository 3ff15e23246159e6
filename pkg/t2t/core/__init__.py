"""
Core T2T modules: tensors with reverse-mode gradients, parameters, randomness and storage.
"""
from .tensor import Tensor, ComputeTape, backward, no_grad
from .params import ParameterStore, adam_step
from .rng import RandomStreams
from .workspace import RunDir
__all__ = [
    "Tensor",
    "ComputeTape",
    "backward",
    "no_grad",
    "ParameterStore",
    "adam_step",
    "RandomStreams",
    "RunDir",
]
