"""
Dense fp64 tensors with a recording tape for reverse-mode gradients.

Every op in this module is registered in ``OPS``. An op computes its forward
result eagerly with numpy; when a ``ComputeTape`` is active and at least one
input is trainable (a parameter leaf or the output of a recorded node), the op
appends a node holding a closure that maps the output gradient to the input
gradients. ``backward`` walks the nodes of one tape in exact reverse order.
"""
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import GradientError, NumericalError, ShapeError

Grad = Optional[np.ndarray]
BackwardFn = Callable[[np.ndarray], Tuple[Grad, ...]]

OPS: Dict[str, Callable[..., "Tensor"]] = {}

MASK_SURROGATE = -1e30


def register_op(name: str) -> Callable:
    """Register a differentiable op under ``name``."""
    def decorator(fn: Callable) -> Callable:
        OPS[name] = fn
        return fn
    return decorator


class Tensor:
    """An immutable dense fp64 array, optionally bound to a parameter entry."""

    __slots__ = ("data", "node", "param")

    def __init__(self, data: Any, param: Any = None):
        arr = np.array(data, dtype=np.float64)
        arr.setflags(write=False)
        self.data = arr
        self.node: Optional["Node"] = None
        self.param = param

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        out = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        arr.setflags(write=False)
        out.data = arr
        out.node = None
        out.param = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def requires_grad(self) -> bool:
        return self.param is not None or self.node is not None

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        kind = "param" if self.param is not None else ("node" if self.node is not None else "const")
        return f"Tensor(shape={self.shape}, {kind})"

    def __add__(self, other: Union["Tensor", float]) -> "Tensor":
        if isinstance(other, Tensor):
            return add(self, other)
        return scalar_add(self, float(other))

    __radd__ = __add__

    def __sub__(self, other: Union["Tensor", float]) -> "Tensor":
        if isinstance(other, Tensor):
            return sub(self, other)
        return scalar_add(self, -float(other))

    def __rsub__(self, other: float) -> "Tensor":
        return scalar_add(scalar_mul(self, -1.0), float(other))

    def __mul__(self, other: Union["Tensor", float]) -> "Tensor":
        if isinstance(other, Tensor):
            return mul(self, other)
        return scalar_mul(self, float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return scalar_mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


@dataclass
class Node:
    """One recorded op application."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class _TapeStack(threading.local):
    def __init__(self):
        self.stack: List[Optional["ComputeTape"]] = []


_tapes = _TapeStack()


class ComputeTape:
    """Ordered record of op applications for one forward pass."""

    def __init__(self):
        self.nodes: List[Node] = []

    def __enter__(self) -> "ComputeTape":
        _tapes.stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tapes.stack.pop()

    def __len__(self) -> int:
        return len(self.nodes)

    def reset(self) -> None:
        self.nodes.clear()

    def backward(self, loss: Tensor) -> None:
        backward(self, loss)


def current_tape() -> Optional[ComputeTape]:
    return _tapes.stack[-1] if _tapes.stack else None


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate ops without recording, e.g. for frozen models."""
    _tapes.stack.append(None)
    try:
        yield
    finally:
        _tapes.stack.pop()


def constant(data: Any) -> Tensor:
    return Tensor(data)


def zeros(shape: Sequence[int]) -> Tensor:
    return Tensor._wrap(np.zeros(tuple(shape)))


def _emit(op: str, data: np.ndarray, inputs: Sequence[Tensor], fn: BackwardFn) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"{op} produced non-finite values")
    out = Tensor._wrap(data)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        node = Node(op, tuple(inputs), out, fn)
        tape.nodes.append(node)
        out.node = node
    return out


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _check_ids(ids: Any, limit: int, op: str) -> np.ndarray:
    arr = np.asarray(ids, dtype=np.int64).reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() >= limit):
        raise ShapeError(f"{op}: id out of range [0, {limit})")
    return arr


# -- linear algebra ---------------------------------------------------------

@register_op("matmul")
def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    A, B = a.data, b.data

    def grad(g):
        return g @ B.T, A.T @ g

    return _emit("matmul", A @ B, (a, b), grad)


# -- elementwise ------------------------------------------------------------

@register_op("add")
def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return _emit("add", a.data + b.data, (a, b), lambda g: (g, g))


@register_op("sub")
def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b), lambda g: (g, -g))


@register_op("mul")
def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    A, B = a.data, b.data
    return _emit("mul", A * B, (a, b), lambda g: (g * B, g * A))


@register_op("tanh")
def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _emit("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


@register_op("sigmoid")
def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _emit("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


@register_op("log")
def log(x: Tensor) -> Tensor:
    X = x.data
    if X.size and np.any(X <= 0.0):
        raise NumericalError("log of non-positive value")
    return _emit("log", np.log(X), (x,), lambda g: (g / X,))


@register_op("exp")
def exp(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = np.exp(x.data)
    return _emit("exp", y, (x,), lambda g: (g * y,))


@register_op("scalar_mul")
def scalar_mul(x: Tensor, c: float) -> Tensor:
    return _emit("scalar_mul", x.data * c, (x,), lambda g: (g * c,))


@register_op("scalar_add")
def scalar_add(x: Tensor, c: float) -> Tensor:
    return _emit("scalar_add", x.data + c, (x,), lambda g: (g,))


_BINARY = {"add": add, "sub": sub, "mul": mul}
_UNARY = {"tanh": tanh, "sigmoid": sigmoid, "log": log, "exp": exp}


def elementwise(op: str, *inputs: Tensor) -> Tensor:
    """Dispatch one of add, sub, mul, tanh, sigmoid, log, exp by name."""
    if op in _BINARY:
        if len(inputs) != 2:
            raise ShapeError(f"{op} takes two inputs")
        return _BINARY[op](*inputs)
    if op in _UNARY:
        if len(inputs) != 1:
            raise ShapeError(f"{op} takes one input")
        return _UNARY[op](inputs[0])
    raise ValueError(f"unknown elementwise op '{op}'")


# -- normalisation ----------------------------------------------------------

def _softmax_last(X: np.ndarray) -> np.ndarray:
    z = X - X.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@register_op("softmax")
def softmax(x: Tensor, axis: int = -1) -> Tensor:
    if axis not in (-1, x.ndim - 1):
        raise ShapeError("softmax is defined over the last axis only")
    s = _softmax_last(x.data)

    def grad(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _emit("softmax", s, (x,), grad)


@register_op("log_softmax")
def log_softmax(x: Tensor) -> Tensor:
    X = x.data
    z = X - X.max(axis=-1, keepdims=True)
    y = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))

    def grad(g):
        return (g - np.exp(y) * g.sum(axis=-1, keepdims=True),)

    return _emit("log_softmax", y, (x,), grad)


# -- indexing ---------------------------------------------------------------

@register_op("embedding_lookup")
def embedding_lookup(table: Tensor, ids: Sequence[int]) -> Tensor:
    if table.ndim != 2:
        raise ShapeError("embedding table must be 2-D")
    idx = _check_ids(ids, table.shape[0], "embedding_lookup")
    rows = table.data[idx]
    shape = table.shape

    def grad(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return _emit("embedding_lookup", rows, (table,), grad)


@register_op("pick")
def pick(x: Tensor, ids: Sequence[int]) -> Tensor:
    """Gather ``x[b, ids[b]]`` for every row ``b``."""
    if x.ndim != 2:
        raise ShapeError("pick expects a 2-D tensor")
    idx = _check_ids(ids, x.shape[1], "pick")
    if idx.size != x.shape[0]:
        raise ShapeError(f"pick: {idx.size} ids for {x.shape[0]} rows")
    rows = np.arange(x.shape[0])
    shape = x.shape

    def grad(g):
        out = np.zeros(shape)
        out[rows, idx] = g
        return (out,)

    return _emit("pick", x.data[rows, idx], (x,), grad)


@register_op("column_slice")
def column_slice(x: Tensor, start: int, stop: int) -> Tensor:
    if x.ndim != 2 or not 0 <= start < stop <= x.shape[1]:
        raise ShapeError(f"column_slice [{start}:{stop}] invalid for {x.shape}")
    shape = x.shape

    def grad(g):
        out = np.zeros(shape)
        out[:, start:stop] = g
        return (out,)

    return _emit("column_slice", x.data[:, start:stop], (x,), grad)


@register_op("concat_cols")
def concat_cols(xs: Sequence[Tensor]) -> Tensor:
    if not xs:
        raise ShapeError("concat_cols needs at least one tensor")
    if any(t.ndim != 2 or t.shape[0] != xs[0].shape[0] for t in xs):
        raise ShapeError("concat_cols: all inputs must be 2-D with equal rows")
    bounds = np.cumsum([0] + [t.shape[1] for t in xs])

    def grad(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(xs)))

    return _emit("concat_cols", np.concatenate([t.data for t in xs], axis=1), tuple(xs), grad)


# -- row-wise broadcasting made explicit ---------------------------------------

@register_op("bias_add")
def bias_add(x: Tensor, b: Tensor) -> Tensor:
    if x.ndim != 2 or b.shape != (x.shape[1],):
        raise ShapeError(f"bias_add: bias {b.shape} does not fit {x.shape}")
    return _emit("bias_add", x.data + b.data, (x, b), lambda g: (g, g.sum(axis=0)))


@register_op("scale_rows")
def scale_rows(x: Tensor, s: Tensor) -> Tensor:
    """Multiply row ``b`` of ``x`` by the scalar ``s[b]``."""
    if x.ndim != 2 or s.size != x.shape[0]:
        raise ShapeError(f"scale_rows: scales {s.shape} do not fit {x.shape}")
    X = x.data
    S = s.data.reshape(-1, 1)
    s_shape = s.shape

    def grad(g):
        return g * S, (g * X).sum(axis=1).reshape(s_shape)

    return _emit("scale_rows", X * S, (x, s), grad)


@register_op("add_n")
def add_n(xs: Sequence[Tensor]) -> Tensor:
    if not xs:
        raise ShapeError("add_n needs at least one tensor")
    for t in xs[1:]:
        _same_shape("add_n", xs[0], t)
    total = np.sum([t.data for t in xs], axis=0)
    return _emit("add_n", total, tuple(xs), lambda g: tuple(g for _ in xs))


# -- reductions -------------------------------------------------------------

def _norm_axis(x: Tensor, axis: Optional[int]) -> Optional[int]:
    if axis is None:
        return None
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"invalid axis {axis} for shape {x.shape}")
    return axis % x.ndim


@register_op("reduce_sum")
def reduce_sum(x: Tensor, axis: Optional[int] = None) -> Tensor:
    ax = _norm_axis(x, axis)
    shape = x.shape

    def grad(g):
        if ax is None:
            return (np.full(shape, float(g)),)
        return (np.broadcast_to(np.expand_dims(g, ax), shape).copy(),)

    return _emit("reduce_sum", x.data.sum(axis=ax), (x,), grad)


@register_op("reduce_mean")
def reduce_mean(x: Tensor, axis: Optional[int] = None) -> Tensor:
    ax = _norm_axis(x, axis)
    n = x.size if ax is None else x.shape[ax]
    if n == 0:
        raise ShapeError("mean over an empty extent")
    shape = x.shape

    def grad(g):
        if ax is None:
            return (np.full(shape, float(g) / n),)
        return (np.broadcast_to(np.expand_dims(g, ax), shape) / n,)

    return _emit("reduce_mean", x.data.mean(axis=ax), (x,), grad)


def reduce(op: str, x: Tensor, axis: Optional[int] = None) -> Tensor:
    if op == "sum":
        return reduce_sum(x, axis)
    if op == "mean":
        return reduce_mean(x, axis)
    raise ValueError(f"unknown reduction '{op}'")


# -- reverse pass -----------------------------------------------------------

def backward(tape: ComputeTape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into every reachable parameter entry."""
    if loss.ndim != 0:
        raise GradientError(f"loss must be a scalar, got shape {loss.shape}")
    if loss.param is not None:
        loss.param.accumulate(np.ones(()))
        return
    if loss.node is None or not any(n is loss.node for n in reversed(tape.nodes)):
        raise GradientError("loss was not recorded on this tape")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones(())}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        for inp, gi in zip(node.inputs, node.backward(g)):
            if gi is None:
                continue
            if inp.param is not None:
                inp.param.accumulate(gi)
            elif inp.node is not None:
                key = id(inp)
                prev = grads.get(key)
                grads[key] = gi if prev is None else prev + gi
