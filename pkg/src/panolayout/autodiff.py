"""Minimal dense-tensor reverse-mode autodiff over numpy arrays.

Values are float64 by default (float32 opt-in). Every op records a backward
closure on the output node; ``backward(loss)`` walks the graph in reverse
topological order and accumulates gradients additively into ``.grad``, so a
second backward pass doubles the grads and minibatch accumulation is just
repeated backward calls. Any op producing a non-finite value raises
``NumericError`` immediately.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

DEFAULT_DTYPE = np.float64


def _as_array(x, dtype):
    a = np.asarray(x, dtype=dtype)
    return a


class Tensor:
    """Dense real array plus the bookkeeping for reverse-mode gradients."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, dtype=None, _check=True):
        self.data = _as_array(data, dtype or DEFAULT_DTYPE)
        if _check and not np.all(np.isfinite(self.data)):
            raise NumericError("tensor constructed with non-finite values")
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self._not_scalar()

    def _not_scalar(self):
        raise ValueError(f"item() on tensor of shape {self.shape}")

    def detach(self):
        """Same data, cut from the graph (no gradient flows through)."""
        t = Tensor.__new__(Tensor)
        t.data = self.data
        t.grad = None
        t.requires_grad = False
        t._parents = ()
        t._backward = None
        return t

    def zero_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad.fill(0.0)

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad += g

    # operator sugar -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return powc(self, p)

    def __getitem__(self, key):
        return getitem(self, key)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Param(Tensor):
    """Named trainable tensor; grads accumulate until zero_grads()."""

    __slots__ = ("name",)

    def __init__(self, data, name, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Param({self.name}, shape={self.shape})"


def zero_grads(params):
    for p in params:
        p.zero_grad()


def _wrap(x, like=None):
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else DEFAULT_DTYPE
    return Tensor(x, dtype=dtype)


def _make(data, parents, backward_fn, op_name, check=False):
    # ops that cannot create non-finite values from finite inputs skip the
    # scan; graph entry points (Tensor/Param construction) are always checked
    if check and not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite output from op '{op_name}'")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    else:
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad, shape):
    """Sum grad down to `shape` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# binary elementwise -------------------------------------------------------

def add(a, b):
    a, b = _wrap(a), _wrap(b, a)

    def bw(out):
        g = out.grad
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), bw, "add")


def sub(a, b):
    a, b = _wrap(a), _wrap(b, a)

    def bw(out):
        g = out.grad
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return _make(a.data - b.data, (a, b), bw, "sub")


def mul(a, b):
    a, b = _wrap(a), _wrap(b, a)

    def bw(out):
        g = out.grad
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), bw, "mul")


def div(a, b):
    a, b = _wrap(a), _wrap(b, a)

    def bw(out):
        g = out.grad
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _make(a.data / b.data, (a, b), bw, "div", check=True)


def neg(a):
    a = _wrap(a)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(-out.grad)

    return _make(-a.data, (a,), bw, "neg")


def powc(a, p):
    """a ** p for a constant real exponent."""
    a = _wrap(a)
    p = float(p)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad * p * a.data ** (p - 1.0))

    return _make(a.data ** p, (a,), bw, "pow", check=True)


# unary elementwise --------------------------------------------------------

def exp(a):
    a = _wrap(a)
    e = np.exp(a.data)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad * e)

    return _make(e, (a,), bw, "exp", check=True)


def log(a):
    a = _wrap(a)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad / a.data)

    return _make(np.log(a.data), (a,), bw, "log", check=True)


def sqrt(a):
    a = _wrap(a)
    r = np.sqrt(a.data)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad * 0.5 / r)

    return _make(r, (a,), bw, "sqrt", check=True)


def absolute(a):
    """|a| with subgradient 0 at the kink."""
    a = _wrap(a)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad * np.sign(a.data))

    return _make(np.abs(a.data), (a,), bw, "abs")


def relu(a):
    a = _wrap(a)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad * (a.data > 0.0))

    return _make(np.maximum(a.data, 0.0), (a,), bw, "relu")


def softplus(a):
    """log(1 + exp(a)), overflow-safe."""
    a = _wrap(a)

    def bw(out):
        if a.requires_grad:
            sig = 1.0 / (1.0 + np.exp(-a.data))
            a.accumulate_grad(out.grad * sig)

    return _make(np.logaddexp(0.0, a.data), (a,), bw, "softplus")


ACOS_SLOPE_CLIP = 1.0 - 1e-7


def acos(a):
    """arccos with input clamped to [-1, 1].

    The derivative is evaluated with |x| clipped to 1 - 1e-7 so the infinite
    slope at the endpoints never enters the graph.
    """
    a = _wrap(a)
    clamped = np.clip(a.data, -1.0, 1.0)

    def bw(out):
        if a.requires_grad:
            x = np.clip(a.data, -ACOS_SLOPE_CLIP, ACOS_SLOPE_CLIP)
            a.accumulate_grad(out.grad * (-1.0 / np.sqrt(1.0 - x * x)))

    return _make(np.arccos(clamped), (a,), bw, "acos")


# contraction / reduction --------------------------------------------------

def matmul(a, b):
    """np.matmul semantics: 2d matrices or stacks with broadcast batch dims."""
    a, b = _wrap(a), _wrap(b, a)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs >=2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def bw(out):
        g = out.grad
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            a.accumulate_grad(_unbroadcast(ga, a.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b.accumulate_grad(_unbroadcast(gb, b.shape))

    return _make(np.matmul(a.data, b.data), (a, b), bw, "matmul")


def _expand_reduced(grad, shape, axes, keepdims):
    if keepdims:
        return np.broadcast_to(grad, shape)
    g = np.expand_dims(grad, axes) if axes else grad
    return np.broadcast_to(g, shape)


def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sumt(a, axis=None, keepdims=False):
    a = _wrap(a)
    axes = _norm_axes(axis, a.ndim)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(_expand_reduced(out.grad, a.shape, axes, keepdims))

    return _make(a.data.sum(axis=axes, keepdims=keepdims), (a,), bw, "sum")


def meant(a, axis=None, keepdims=False):
    a = _wrap(a)
    axes = _norm_axes(axis, a.ndim)
    count = 1
    for ax in axes:
        count *= a.shape[ax]

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(_expand_reduced(out.grad, a.shape, axes, keepdims) / count)

    return _make(a.data.mean(axis=axes, keepdims=keepdims), (a,), bw, "mean")


# shape ops ----------------------------------------------------------------

def reshape(a, shape):
    a = _wrap(a)
    old = a.shape

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad.reshape(old))

    return _make(a.data.reshape(shape), (a,), bw, "reshape")


def transpose(a, axes):
    a = _wrap(a)
    axes = tuple(ax % a.ndim for ax in axes)
    inv = np.argsort(axes)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(out.grad.transpose(inv))

    return _make(a.data.transpose(axes), (a,), bw, "transpose")


def transpose_last2(a):
    a = _wrap(a)
    order = tuple(range(a.ndim - 2)) + (a.ndim - 1, a.ndim - 2)
    return transpose(a, order)


def roll(a, shift, axis=0):
    """Circular shift; exact inverse is roll(y, -shift, axis)."""
    a = _wrap(a)

    def bw(out):
        if a.requires_grad:
            a.accumulate_grad(np.roll(out.grad, -shift, axis=axis))

    return _make(np.roll(a.data, shift, axis=axis), (a,), bw, "roll")


def getitem(a, key):
    a = _wrap(a)

    def bw(out):
        if a.requires_grad:
            g = np.zeros_like(a.data)
            np.add.at(g, key, out.grad)
            a.accumulate_grad(g)

    return _make(a.data[key].copy(), (a,), bw, "getitem")


def concat(tensors, axis=0):
    tensors = [_wrap(t) for t in tensors]
    sizes = [t.shape[axis % t.ndim] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(out):
        ax = axis % tensors[0].ndim
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * out.grad.ndim
                idx[ax] = slice(lo, hi)
                t.accumulate_grad(out.grad[tuple(idx)])

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), bw, "concat")


def gather(table, idx):
    """table[idx] for a 1-d tensor `table` and a constant integer array `idx`."""
    table = _wrap(table)
    if table.ndim != 1:
        raise ValueError(f"gather expects a 1-d table, got shape {table.shape}")
    idx = np.asarray(idx)

    def bw(out):
        if table.requires_grad:
            g = np.zeros_like(table.data)
            np.add.at(g, idx, out.grad)
            table.accumulate_grad(g)

    return _make(table.data[idx].copy(), (table,), bw, "gather")


# fused composites -----------------------------------------------------------

def softmax_lastdim(a):
    """Row-stable softmax over the last axis (max-subtracted)."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    prob = e / e.sum(axis=-1, keepdims=True)

    def bw(out):
        if a.requires_grad:
            g = out.grad
            a.accumulate_grad(prob * (g - np.sum(g * prob, axis=-1, keepdims=True)))

    return _make(prob, (a,), bw, "softmax")


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize over the last axis, then scale and shift (learnable)."""
    x, gain, bias = _wrap(x), _wrap(gain), _wrap(bias)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    normed = centered * inv_std

    def bw(out):
        g = out.grad
        if gain.requires_grad:
            gain.accumulate_grad(_unbroadcast(g * normed, gain.shape))
        if bias.requires_grad:
            bias.accumulate_grad(_unbroadcast(g, bias.shape))
        if x.requires_grad:
            gy = g * gain.data
            term = gy - gy.mean(axis=-1, keepdims=True) \
                - normed * np.mean(gy * normed, axis=-1, keepdims=True)
            x.accumulate_grad(term * inv_std)

    return _make(normed * gain.data + bias.data, (x, gain, bias), bw, "layer_norm")


def dropout(a, rate, rng):
    """Inverted dropout with a caller-supplied Generator; identity at rate 0."""
    if rate <= 0.0:
        return a
    a = _wrap(a)
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return mul(a, Tensor(keep, dtype=a.dtype))


# backward driver ----------------------------------------------------------

def backward(loss):
    """Accumulate d(loss)/d(node) into .grad for every node reachable from loss.

    Requires a scalar loss. Grads add up across calls; use zero_grads between
    optimizer steps.
    """
    if loss.size != 1:
        raise ValueError(f"backward expects a scalar loss, got shape {loss.shape}")
    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited and p.requires_grad:
                stack.append((p, False))

    loss.accumulate_grad(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node)
