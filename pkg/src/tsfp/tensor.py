"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a numpy array.  Every differentiable operation records
its parents and a closure mapping the output gradient to parent gradients;
:meth:`Tensor.backward` walks the graph in reverse topological order.  Only
leaf tensors (created by the user with ``requires_grad=True``) accumulate into
``.grad``; intermediate gradients live only for the duration of one backward
pass, so calling ``backward`` twice doubles every leaf gradient.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

_DEFAULT_DTYPE = np.dtype(np.float32)


class ShapeError(ValueError):
    """Raised when tensor shapes violate an operation's contract."""

    def __init__(self, message: str, axis: str | None = None):
        super().__init__(message)
        self.axis = axis


def get_default_dtype() -> np.dtype:
    return _DEFAULT_DTYPE


def set_default_dtype(dtype) -> None:
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported dtype {dtype}; use float32 or float64")
    _DEFAULT_DTYPE = dtype


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the default dtype, e.g. ``with precision("float64")``."""
    previous = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "flags")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        dtype = np.dtype(dtype) if dtype is not None else _DEFAULT_DTYPE
        self.data = np.array(data, dtype=dtype, copy=True) if not (
            isinstance(data, np.ndarray) and data.dtype == dtype
        ) else data
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self.flags: dict | None = None

    # construction helpers ------------------------------------------------
    @classmethod
    def _make(cls, data: np.ndarray, parents: Iterable["Tensor"], backward: BackwardFn) -> "Tensor":
        parents = tuple(parents)
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.flags = None
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @staticmethod
    def zeros(shape, requires_grad: bool = False, dtype=None) -> "Tensor":
        dtype = dtype or _DEFAULT_DTYPE
        return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad, dtype=dtype)

    # basic properties ----------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _raise_item(self)

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return self.shape[0]

    # autograd --------------------------------------------------------------
    def backward(self, grad=None) -> None:
        """Back-propagate from this tensor; a scalar output gets seed 1."""
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")
        if grad is None:
            if self.size != 1:
                raise RuntimeError("backward() without a seed needs a single-element tensor")
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad.data if isinstance(grad, Tensor) else grad, dtype=self.dtype)
            if seed.shape != self.shape:
                raise ShapeError(f"seed shape {seed.shape} != tensor shape {self.shape}")

        order = _topological_order(self)
        grads: dict[int, np.ndarray] = {id(self): seed}
        for node in order:
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # operators -------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_as_tensor(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def _raise_item(t: Tensor) -> float:
    raise ValueError(f"item() needs a single-element tensor, got shape {t.shape}")


def _topological_order(root: Tensor) -> list[Tensor]:
    """Nodes ordered so that every node precedes its parents (iterative DFS)."""
    visited: set[int] = set()
    post: list[Tensor] = []
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            post.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited and p.requires_grad:
                stack.append((p, False))
    post.reverse()
    return post


def _as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x), dtype=dtype)


def _is_scalar_like(t: Tensor) -> bool:
    return t.ndim == 0 or (t.size == 1 and t.ndim <= 1)


def _binary_operands(a, b) -> tuple[Tensor, Tensor]:
    if not isinstance(a, Tensor):
        a = Tensor(np.asarray(a, dtype=b.dtype), dtype=b.dtype)
    if not isinstance(b, Tensor):
        b = Tensor(np.asarray(b, dtype=a.dtype), dtype=a.dtype)
    if a.shape != b.shape and not (_is_scalar_like(a) or _is_scalar_like(b)):
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape} (only tensor-scalar broadcasting)")
    return a, b


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _binary_operands(a, b)
    return Tensor._make(
        a.data + b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _binary_operands(a, b)
    return Tensor._make(
        a.data - b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _binary_operands(a, b)
    return Tensor._make(
        a.data * b.data, (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _binary_operands(a, b)
    out = a.data / b.data
    return Tensor._make(
        out, (a, b),
        lambda g: (_unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)),
    )


def scalar_mul(a: Tensor, c: float) -> Tensor:
    c = a.dtype.type(c)
    return Tensor._make(a.data * c, (a,), lambda g: (g * c,))


def neg(a: Tensor) -> Tensor:
    return Tensor._make(-a.data, (a,), lambda g: (-g,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    # np.maximum keeps NaN visible instead of clamping it to 0
    return Tensor._make(np.maximum(a.data, 0).astype(a.dtype), (a,), lambda g: (g * mask,))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return Tensor._make(out, (a,), lambda g: (g * out * (1.0 - out),))


def log(a: Tensor) -> Tensor:
    return Tensor._make(np.log(a.data), (a,), lambda g: (g / a.data,))


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    return Tensor._make(out, (a,), lambda g: (g * 0.5 / out,))


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """max(a, floor); the gradient passes where ``a >= floor``."""
    keep = a.data >= floor
    out = np.maximum(a.data, a.dtype.type(floor))  # NaN stays NaN
    return Tensor._make(out, (a,), lambda g: (g * keep,))


def elementwise(kind: str, a: Tensor, b=None) -> Tensor:
    """Dispatch by name: relu, sigmoid, add, mul, scalar_mul."""
    if kind == "relu":
        return relu(a)
    if kind == "sigmoid":
        return sigmoid(a)
    if kind == "add":
        return add(a, b)
    if kind == "mul":
        return mul(a, b)
    if kind == "scalar_mul":
        return scalar_mul(a, b)
    raise ValueError(f"unknown elementwise kind {kind!r}")


# ---------------------------------------------------------------------------
# reductions and shape ops
# ---------------------------------------------------------------------------

def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = np.asarray(a.data.sum(axis=axis, keepdims=keepdims), dtype=a.dtype)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._make(out, (a,), backward)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return scalar_mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reduce_stats(a: Tensor) -> tuple[float, float, float]:
    """(sum, mean, population std) of all elements."""
    if a.size == 0:
        raise ShapeError("reduce_stats of an empty tensor")
    x = a.data.astype(np.float64) if a.dtype != np.float64 else a.data
    total = float(x.sum())
    mu = total / x.size
    std = float(np.sqrt(np.mean((x - mu) ** 2)))
    return total, mu, std


def reshape(a: Tensor, shape) -> Tensor:
    return Tensor._make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def getitem(a: Tensor, index) -> Tensor:
    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return Tensor._make(a.data[index], (a,), backward)


def broadcast_to(a: Tensor, shape) -> Tensor:
    """Explicit broadcast; gradients are summed back over expanded axes."""
    shape = tuple(shape)
    out = np.broadcast_to(a.data, shape)
    lead = len(shape) - a.ndim
    expanded = tuple(range(lead)) + tuple(
        lead + i for i, n in enumerate(a.shape) if n == 1 and shape[lead + i] != 1
    )

    def backward(g):
        red = g.sum(axis=expanded, keepdims=True) if expanded else g
        return (red.reshape(a.shape),)

    return Tensor._make(out.copy(), (a,), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    out = np.stack([t.data for t in tensors], axis=axis)
    return Tensor._make(
        out, tensors,
        lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(tensors))),
    )


def matvec(w: Tensor, v: Tensor) -> Tensor:
    """(M,K) @ (K,) -> (M,), or batched (M,K) @ (N,K) -> (N,M)."""
    if v.ndim == 1:
        if w.shape[1] != v.shape[0]:
            raise ShapeError(f"matvec: {w.shape} @ {v.shape}")
        return Tensor._make(w.data @ v.data, (w, v), lambda g: (np.outer(g, v.data), w.data.T @ g))
    if w.shape[1] != v.shape[1]:
        raise ShapeError(f"matvec: {w.shape} @ {v.shape}")
    return Tensor._make(v.data @ w.data.T, (w, v), lambda g: (g.T @ v.data, g @ w.data))
