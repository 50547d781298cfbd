"""Dense tensors with reverse-mode automatic differentiation.

A small numpy-backed engine: tensors are 0-, 1- or 2-d arrays in f32 or
f64, graph nodes are recorded eagerly by the op functions, and
``backward`` replays the graph in reverse topological order. There is no
implicit broadcasting; every shape rule is explicit in the op that allows
it. Gather/scatter reductions go through the kernels subpackage, which
uses the compiled extension when available.

Graphs are single-threaded contexts: build and differentiate a graph on
one thread. Distinct graphs on distinct threads are safe, and parameters
may be shared read-only during forward evaluation.
"""

from __future__ import annotations

import contextlib

import numpy as np

from . import kernels
from .errors import BadSegmentId, EmptyInput, NotScalar, ShapeMismatch

DTYPES = {"f32": np.float32, "f64": np.float64}

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (forward-only evaluation)."""
    global _grad_enabled
    saved = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = saved


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(DTYPES.get(dtype, dtype), copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __float__(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name})"


class Parameter(Tensor):
    """A named trainable tensor; gradient is kept as a dense array."""

    __slots__ = ("name",)

    def __init__(self, name, data, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape}, dtype={self.data.dtype.name})"


def _result(data, parents, backward_fn):
    needs = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(data)
    if needs:
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    # Never mutate in place: gradient arrays may be shared between edges.
    t.grad = g if t.grad is None else t.grad + g


def _check_binary(a: Tensor, b: Tensor, op: str):
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")
    if a.data.dtype != b.data.dtype:
        raise ShapeMismatch(f"{op}: dtypes {a.data.dtype} and {b.data.dtype} differ")


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_binary(a, b, "add")

    def backward_fn(g):
        _accum(a, g)
        _accum(b, g)

    return _result(a.data + b.data, (a, b), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_binary(a, b, "sub")

    def backward_fn(g):
        _accum(a, g)
        _accum(b, -g)

    return _result(a.data - b.data, (a, b), backward_fn)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product."""
    _check_binary(a, b, "hadamard")

    def backward_fn(g):
        _accum(a, g * b.data)
        _accum(b, g * a.data)

    return _result(a.data * b.data, (a, b), backward_fn)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward_fn(g):
        _accum(a, g * c)

    return _result(a.data * c, (a,), backward_fn)


def one_minus(a: Tensor) -> Tensor:
    def backward_fn(g):
        _accum(a, -g)

    return _result(1.0 - a.data, (a,), backward_fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeMismatch(
            f"matmul: operands must be 2-d, got {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeMismatch(
            f"matmul: inner extents differ, {a.data.shape} x {b.data.shape}"
        )
    if a.data.dtype != b.data.dtype:
        raise ShapeMismatch(f"matmul: dtypes {a.data.dtype} and {b.data.dtype} differ")

    def backward_fn(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _result(a.data @ b.data, (a, b), backward_fn)


def add_bias(a: Tensor, b: Tensor) -> Tensor:
    """Add a length-d vector to every row of an (n, d) matrix."""
    if a.data.ndim != 2 or b.data.ndim != 1 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeMismatch(f"add_bias: shapes {a.data.shape} and {b.data.shape}")
    if a.data.dtype != b.data.dtype:
        raise ShapeMismatch("add_bias: dtype mismatch")

    def backward_fn(g):
        _accum(a, g)
        _accum(b, g.sum(axis=0))

    return _result(a.data + b.data, (a, b), backward_fn)


def abs_val(a: Tensor) -> Tensor:
    def backward_fn(g):
        _accum(a, g * np.sign(a.data))

    return _result(np.abs(a.data), (a,), backward_fn)


def sum_all(a: Tensor) -> Tensor:
    def backward_fn(g):
        _accum(a, np.full_like(a.data, float(g)))

    return _result(a.data.sum(), (a,), backward_fn)


# ---------------------------------------------------------------------------
# activations


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    out[~pos] = ex / (1.0 + ex)

    def backward_fn(g):
        _accum(x, g * out * (1.0 - out))

    return _result(out, (x,), backward_fn)


def tanh_act(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def backward_fn(g):
        _accum(x, g * (1.0 - out * out))

    return _result(out, (x,), backward_fn)


# ---------------------------------------------------------------------------
# shape ops


def reshape(a: Tensor, shape) -> Tensor:
    orig = a.data.shape

    def backward_fn(g):
        _accum(a, g.reshape(orig))

    return _result(a.data.reshape(shape), (a,), backward_fn)


def concat(a: Tensor, b: Tensor, axis: int = 0) -> Tensor:
    if a.data.ndim != b.data.ndim:
        raise ShapeMismatch(f"concat: ranks differ, {a.data.shape} vs {b.data.shape}")
    if a.data.dtype != b.data.dtype:
        raise ShapeMismatch("concat: dtype mismatch")
    if axis >= a.data.ndim:
        raise ShapeMismatch(f"concat: axis {axis} out of range for rank {a.data.ndim}")
    for ax in range(a.data.ndim):
        if ax != axis and a.data.shape[ax] != b.data.shape[ax]:
            raise ShapeMismatch(f"concat: shapes {a.data.shape} and {b.data.shape}")
    split_at = a.data.shape[axis]

    def backward_fn(g):
        if axis == 0:
            _accum(a, g[:split_at])
            _accum(b, g[split_at:])
        else:
            _accum(a, g[:, :split_at])
            _accum(b, g[:, split_at:])

    return _result(np.concatenate([a.data, b.data], axis=axis), (a, b), backward_fn)


def stack_rows(parts) -> Tensor:
    """Vertically stack 1-d vectors and/or 2-d matrices into one matrix."""
    parts = list(parts)
    if not parts:
        raise EmptyInput("stack_rows of nothing")
    blocks = [p.data if p.data.ndim == 2 else p.data.reshape(1, -1) for p in parts]
    widths = {b.shape[1] for b in blocks}
    if len(widths) != 1:
        raise ShapeMismatch(f"stack_rows: varying widths {sorted(widths)}")
    offsets = np.cumsum([0] + [b.shape[0] for b in blocks])

    def backward_fn(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            piece = g[lo:hi]
            _accum(p, piece if p.data.ndim == 2 else piece.reshape(p.data.shape))

    return _result(np.concatenate(blocks, axis=0), tuple(parts), backward_fn)


# ---------------------------------------------------------------------------
# gather / scatter / reductions


def take_rows(a: Tensor, idx) -> Tensor:
    """Select rows of a 2-d tensor; gradients scatter-add back."""
    if a.data.ndim != 2:
        raise ShapeMismatch(f"take_rows: need a matrix, got {a.data.shape}")
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= a.data.shape[0]):
        raise BadSegmentId(f"take_rows: index out of range 0..{a.data.shape[0] - 1}")

    def backward_fn(g):
        ga = np.zeros_like(a.data)
        kernels.index_add_rows(ga, idx, np.ascontiguousarray(g))
        _accum(a, ga)

    return _result(a.data[idx], (a,), backward_fn)


def scale_rows(a: Tensor, s) -> Tensor:
    """Multiply each row of (n, d) by a constant per-row factor (n,)."""
    s = np.asarray(s, dtype=a.data.dtype)
    if a.data.ndim != 2 or s.shape != (a.data.shape[0],):
        raise ShapeMismatch(f"scale_rows: shapes {a.data.shape} and {s.shape}")
    col = s[:, None]

    def backward_fn(g):
        _accum(a, g * col)

    return _result(a.data * col, (a,), backward_fn)


def segment_sum(values: Tensor, segment_ids, groups: int) -> Tensor:
    """Row r of the output is the sum of value rows with segment id r.

    Empty groups yield zero rows. Summation order is ascending row index,
    so results are deterministic run to run.
    """
    if values.data.ndim != 2:
        raise ShapeMismatch(f"segment_sum: need a matrix, got {values.data.shape}")
    ids = np.asarray(segment_ids, dtype=np.int64)
    if ids.shape != (values.data.shape[0],):
        raise ShapeMismatch("segment_sum: one segment id per row required")
    if ids.size and (ids.min() < 0 or ids.max() >= groups):
        raise BadSegmentId(f"segment_sum: ids must lie in 0..{groups - 1}")
    out = np.zeros((groups, values.data.shape[1]), dtype=values.data.dtype)
    kernels.index_add_rows(out, ids, np.ascontiguousarray(values.data))

    def backward_fn(g):
        _accum(values, g[ids])

    return _result(out, (values,), backward_fn)


def segment_max(values: Tensor, segment_ids, groups: int):
    """Per-column max over each segment's rows. Returns (tensor, argrows).

    Gradient flows only to the argmax rows. Every segment must be
    non-empty.
    """
    if values.data.ndim != 2:
        raise ShapeMismatch(f"segment_max: need a matrix, got {values.data.shape}")
    ids = np.asarray(segment_ids, dtype=np.int64)
    if ids.shape != (values.data.shape[0],):
        raise ShapeMismatch("segment_max: one segment id per row required")
    if ids.size == 0 or groups <= 0:
        raise EmptyInput("segment_max over no rows")
    if ids.min() < 0 or ids.max() >= groups:
        raise BadSegmentId(f"segment_max: ids must lie in 0..{groups - 1}")
    out, arg = kernels.segment_max_rows(np.ascontiguousarray(values.data), ids, groups)
    if (arg < 0).any():
        raise EmptyInput("segment_max: empty segment")

    def backward_fn(g):
        ga = np.zeros_like(values.data)
        np.add.at(ga, (arg, np.arange(values.data.shape[1])[None, :]), g)
        _accum(values, ga)

    return _result(out, (values,), backward_fn), arg


def max_over_rows(v: Tensor):
    """Column-wise maximum of a matrix. Returns (tensor of shape (d,),
    argmax row indices). Gradient reaches only the argmax rows."""
    if v.data.ndim != 2:
        raise ShapeMismatch(f"max_over_rows: need a matrix, got {v.data.shape}")
    if v.data.shape[0] == 0:
        raise EmptyInput("max_over_rows of an empty matrix")
    arg = v.data.argmax(axis=0)
    cols = np.arange(v.data.shape[1])
    out = v.data[arg, cols]

    def backward_fn(g):
        gv = np.zeros_like(v.data)
        gv[arg, cols] = g
        _accum(v, gv)

    return _result(out, (v,), backward_fn), arg


# ---------------------------------------------------------------------------
# losses and probabilities


def softmax_rows(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeMismatch(f"softmax_rows: need a matrix, got {a.data.shape}")
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)

    def backward_fn(g):
        dot = (g * p).sum(axis=1, keepdims=True)
        _accum(a, p * (g - dot))

    return _result(p, (a,), backward_fn)


def cross_entropy_logits(logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy of integer labels against rows of logits."""
    if logits.data.ndim != 2:
        raise ShapeMismatch(f"cross_entropy_logits: need a matrix, got {logits.data.shape}")
    y = np.asarray(labels, dtype=np.int64)
    n, c = logits.data.shape
    if y.shape != (n,):
        raise ShapeMismatch("cross_entropy_logits: one label per row required")
    if y.size and (y.min() < 0 or y.max() >= c):
        raise BadSegmentId(f"labels must lie in 0..{c - 1}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    losses = -np.log(np.maximum(p[rows, y], np.finfo(logits.data.dtype).tiny))

    def backward_fn(g):
        gl = p.copy()
        gl[rows, y] -= 1.0
        _accum(logits, gl * (float(g) / n))

    return _result(losses.mean(), (logits,), backward_fn)


def bce_logits(logits: Tensor, targets) -> Tensor:
    """Mean binary cross-entropy of 0/1 targets against a logit vector."""
    if logits.data.ndim != 1:
        raise ShapeMismatch(f"bce_logits: need a vector, got {logits.data.shape}")
    y = np.asarray(targets, dtype=logits.data.dtype)
    if y.shape != logits.data.shape:
        raise ShapeMismatch("bce_logits: one target per logit required")
    x = logits.data
    losses = np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))
    n = max(x.shape[0], 1)
    sig = np.empty_like(x)
    pos = x >= 0
    sig[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    sig[~pos] = ex / (1.0 + ex)

    def backward_fn(g):
        _accum(logits, (sig - y) * (float(g) / n))

    return _result(losses.mean(), (logits,), backward_fn)


# ---------------------------------------------------------------------------
# backward pass


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into .grad of every tensor reachable from
    the scalar loss."""
    if loss.data.shape != ():
        raise NotScalar(f"backward needs a scalar, got shape {loss.data.shape}")
    if not loss.requires_grad:
        return

    # Reverse topological order, iteratively (graphs can be deep).
    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))

    loss.grad = np.ones((), dtype=loss.data.dtype)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# finite differences


def finite_diff_grad(fn, p: Parameter, epsilon: float = 1e-5) -> Tensor:
    """Central-difference gradient of a scalar function of p's value.

    ``fn`` is a zero-argument callable that reads p.data and returns a
    float (or scalar tensor); entries of p.data are perturbed in place and
    restored.
    """
    flat = p.data.reshape(-1)
    grad = np.zeros(flat.shape, dtype=np.float64)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + epsilon
        hi = float(fn())
        flat[i] = saved - epsilon
        lo = float(fn())
        flat[i] = saved
        grad[i] = (hi - lo) / (2.0 * epsilon)
    return Tensor(grad.reshape(p.data.shape).astype(p.data.dtype))


def zeros(shape, dtype="f64") -> Tensor:
    return Tensor(np.zeros(shape, dtype=DTYPES.get(dtype, dtype)))
