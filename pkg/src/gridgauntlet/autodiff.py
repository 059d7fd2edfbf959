"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

Just enough machinery to train a small recurrent forecaster and to take
gradients of its loss with respect to both parameters and inputs.  Tensors
wrap numpy arrays; every primitive records a backward closure, and
``backward()`` replays the implicit tape in reverse topological order.

Broadcasting is deliberately restricted: same-shape, scalar-with-tensor,
and the (n, m) + (m,) bias pattern needed for batched recurrent steps.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested primitive."""


class NumericError(ArithmeticError):
    """A value or gradient became non-finite."""


class ContractError(ValueError):
    """An operation was called outside its contract (e.g. non-scalar loss)."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self):
        return float(self.data.reshape(-1)[0])


def _result(data, parents, backward):
    out = Tensor(data)
    out._parents = tuple(parents)
    out._backward = backward
    return out


def _needs_grad(t):
    return t.requires_grad or t._parents


def _accumulate(t, g):
    if not _needs_grad(t):
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad = t.grad + g


def _unbroadcast(g, shape):
    """Reduce gradient ``g`` back to ``shape`` after a broadcast forward op."""
    if g.shape == shape:
        return g
    if shape == () or shape == (1,):
        return np.sum(g).reshape(shape)
    # bias pattern: (n, m) reduced to (m,)
    if len(shape) == 1 and g.ndim == 2 and g.shape[1] == shape[0]:
        return np.sum(g, axis=0)
    raise ShapeError(f"cannot reduce gradient of shape {g.shape} to {shape}")


def _check_addable(a, b):
    sa, sb = a.data.shape, b.data.shape
    if sa == sb:
        return
    if a.data.size == 1 or b.data.size == 1:
        return
    # bias broadcast: (n, m) with (m,)
    if len(sa) == 2 and sb == (sa[1],):
        return
    if len(sb) == 2 and sa == (sb[1],):
        return
    raise ShapeError(f"incompatible shapes for elementwise op: {sa} vs {sb}")


def add(a, b):
    _check_addable(a, b)
    data = a.data + b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _result(data, (a, b), backward)


def sub(a, b):
    _check_addable(a, b)
    data = a.data - b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(-g, b.data.shape))

    return _result(data, (a, b), backward)


def mul(a, b):
    _check_addable(a, b)
    data = a.data * b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _result(data, (a, b), backward)


def scale(a, c):
    c = float(c)
    data = a.data * c

    def backward(g):
        _accumulate(a, g * c)

    return _result(data, (a,), backward)


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.data.shape} vs {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _result(data, (a, b), backward)


def tanh(a):
    data = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - data * data))

    return _result(data, (a,), backward)


def sigmoid(a):
    data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        _accumulate(a, g * data * (1.0 - data))

    return _result(data, (a,), backward)


def abs_(a):
    data = np.abs(a.data)
    sign = np.sign(a.data)  # sign(0) = 0 by convention

    def backward(g):
        _accumulate(a, g * sign)

    return _result(data, (a,), backward)


def reduce_mean(a):
    data = np.array(np.mean(a.data))
    n = a.data.size

    def backward(g):
        _accumulate(a, np.full(a.data.shape, float(g) / n))

    return _result(data, (a,), backward)


def slice_rows(a, start, stop):
    """Rows [start, stop) of a 2-D tensor; gradient scatters back in place."""
    if a.data.ndim != 2:
        raise ShapeError(f"slice_rows needs a 2-D tensor, got shape {a.data.shape}")
    data = a.data[start:stop]

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        _accumulate(a, full)

    return _result(data, (a,), backward)


def square(a):
    return mul(a, a)


def backward(loss, leaves=None):
    """Run reverse-mode accumulation from a scalar ``loss`` node.

    Populates ``.grad`` on every tensor that requires it.  If ``leaves`` is
    given, returns their gradients as a list (zeros for unreached leaves).
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.data.shape}")

    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))

    for node in topo:
        node.grad = None
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)

    if leaves is not None:
        grads = []
        for leaf in leaves:
            g = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient encountered")
            grads.append(g)
        return grads
    return None
