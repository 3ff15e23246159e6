"""
Central-difference verification of tape gradients.
"""
from typing import Callable, Dict, Optional

import numpy as np

from .params import ParameterStore
from .tensor import ComputeTape, Tensor, backward, no_grad


def analytic_gradients(f: Callable[[], Tensor], store: ParameterStore) -> Dict[str, np.ndarray]:
    store.zero_grad()
    with ComputeTape() as tape:
        loss = f()
    backward(tape, loss)
    grads = {p.name: p.grad.copy() for p in store}
    store.zero_grad()
    return grads


def gradient_check(
    f: Callable[[], Tensor],
    store: ParameterStore,
    h: float = 1e-5,
    floor: float = 1e-3,
    names: Optional[list] = None,
) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` rebuilds the scalar loss from the current store values each call.
    The relative error of one scalar is ``|a - n| / max(|a|, |n|, floor)``.
    """
    analytic = analytic_gradients(f, store)
    worst = 0.0
    for name in names or store.names():
        base = store.value(name).copy()
        flat = base.reshape(-1)
        for i in range(flat.size):
            bumped = flat.copy()
            bumped[i] = flat[i] + h
            store.assign(name, bumped.reshape(base.shape))
            with no_grad():
                up = f().item()
            bumped[i] = flat[i] - h
            store.assign(name, bumped.reshape(base.shape))
            with no_grad():
                down = f().item()
            numeric = (up - down) / (2.0 * h)
            a = float(analytic[name].reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
        store.assign(name, base)
    return worst
