"""Dense 2-D float64 grids with define-by-run reverse-mode differentiation.

Every value is a 2-D ``numpy.ndarray`` of dtype float64 (a "grid"). A
:class:`Tape` records each primitive as it executes; :meth:`Tape.backward`
walks the record in reverse and accumulates vector-Jacobian products.

The only broadcast supported is adding a ``(rows, 1)`` bias column to a
``(rows, cols)`` grid.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ._kernels import sincos


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class ContractError(ValueError):
    """A precondition of an operation was violated."""


def as_grid(value) -> np.ndarray:
    """Coerce scalars, vectors and matrices to a 2-D float64 grid."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionError(f"grids are 2-D, got shape {arr.shape}")
    return arr


class Node:
    """One value on a tape."""

    __slots__ = ("tape", "index", "value", "parents", "vjp", "name", "requires_grad")

    def __init__(self, tape, index, value, parents=(), vjp=None, name=None, requires_grad=False):
        self.tape = tape
        self.index = index
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.name = name
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Node #{self.index}{label} shape={self.shape}>"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    """Ordered record of a forward computation.

    Nodes are appended as operations run, so each node's inputs always
    precede it. A fresh tape is meant to be built for every forward pass.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self.params: dict[str, Node] = {}

    def __len__(self):
        return len(self.nodes)

    def release(self) -> None:
        """Drop every recorded node.

        Nodes point back at their tape, so a finished tape is a reference
        cycle; releasing it lets its buffers be freed right away instead of
        waiting for the cycle collector.
        """
        self.nodes.clear()
        self.params.clear()

    def _push(self, value, parents=(), vjp=None, name=None, requires_grad=False) -> Node:
        node = Node(self, len(self.nodes), value, tuple(parents), vjp, name, requires_grad)
        self.nodes.append(node)
        return node

    def param(self, value, name: str) -> Node:
        """Register a trainable leaf. Names must be unique per tape."""
        if name in self.params:
            raise ContractError(f"parameter {name!r} registered twice")
        node = self._push(as_grid(value), name=name, requires_grad=True)
        self.params[name] = node
        return node

    def const(self, value, name: str | None = None) -> Node:
        return self._push(as_grid(value), name=name)

    def record(self, value, parents: Sequence[Node], vjp: Callable) -> Node:
        """Append the result of a primitive.

        ``vjp(g)`` maps the upstream gradient to a tuple with one entry per
        parent (``None`` for parents that need no gradient). It is dropped
        when no parent requires a gradient.
        """
        needs = any(p.requires_grad for p in parents)
        return self._push(value, parents, vjp if needs else None, requires_grad=needs)

    def backward(self, loss: Node) -> dict[str, np.ndarray]:
        """Gradients of a scalar ``loss`` for every registered parameter.

        Parameters with no path to ``loss`` get an all-zero gradient.
        """
        if loss.tape is not self:
            raise ContractError("loss node belongs to another tape")
        if loss.shape != (1, 1):
            raise ContractError(f"backward needs a scalar (1x1) loss, got shape {loss.shape}")
        grads: list[np.ndarray | None] = [None] * len(self.nodes)
        grads[loss.index] = np.ones((1, 1))
        for node in reversed(self.nodes[: loss.index + 1]):
            g = grads[node.index]
            if g is None or node.vjp is None:
                continue
            for parent, pg in zip(node.parents, node.vjp(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if grads[parent.index] is None:
                    grads[parent.index] = pg
                else:
                    grads[parent.index] = grads[parent.index] + pg
        out = {}
        for name, node in self.params.items():
            g = grads[node.index]
            out[name] = np.zeros_like(node.value) if g is None else g
        return out


def _tape_of(*args) -> Tape:
    for a in args:
        if isinstance(a, Node):
            return a.tape
    raise ContractError("at least one operand must be a Node")


def _lift(tape: Tape, x) -> Node:
    if isinstance(x, Node):
        if x.tape is not tape:
            raise ContractError("operands live on different tapes")
        return x
    return tape.const(x)


def _bias_reduce(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    return g.sum(axis=1, keepdims=True)


def _check_same_or_bias(a: Node, b: Node, op: str):
    if a.shape == b.shape:
        return
    if b.shape == (a.shape[0], 1) or a.shape == (b.shape[0], 1):
        return
    raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not compatible")


def matmul(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} are not conformable")
    av, bv = a.value, b.value
    return tape.record(
        av @ bv,
        (a, b),
        lambda g: (g @ bv.T if a.requires_grad else None, av.T @ g if b.requires_grad else None),
    )


def add(a, b) -> Node:
    """Elementwise sum; either side may be a bias column."""
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    _check_same_or_bias(a, b, "add")
    sa, sb = a.shape, b.shape
    return tape.record(a.value + b.value, (a, b), lambda g: (_bias_reduce(g, sa), _bias_reduce(g, sb)))


def sub(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    _check_same_or_bias(a, b, "sub")
    sa, sb = a.shape, b.shape
    return tape.record(a.value - b.value, (a, b), lambda g: (_bias_reduce(g, sa), -_bias_reduce(g, sb)))


def mul(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    if a.shape != b.shape:
        raise DimensionError(f"mul: shapes {a.shape} and {b.shape} differ")
    av, bv = a.value, b.value
    return tape.record(
        av * bv,
        (a, b),
        lambda g: (g * bv if a.requires_grad else None, g * av if b.requires_grad else None),
    )


def scale(a: Node, c: float) -> Node:
    """Multiply by a constant Python scalar."""
    c = float(c)
    return a.tape.record(a.value * c, (a,), lambda g: (g * c,))


def sin(a: Node) -> Node:
    s, c = sincos(a.value)
    return a.tape.record(s, (a,), lambda g: (g * c,))


def square(a: Node) -> Node:
    x = a.value
    return a.tape.record(x * x, (a,), lambda g: (2.0 * x * g,))


def relu(a: Node) -> Node:
    x = a.value
    return a.tape.record(np.maximum(x, 0.0), (a,), lambda g: (g * (x > 0),))


def exp(a: Node) -> Node:
    y = np.exp(a.value)
    return a.tape.record(y, (a,), lambda g: (g * y,))


def total(a: Node) -> Node:
    """Sum of all entries as a 1x1 grid."""
    shape = a.shape
    return a.tape.record(
        np.array([[a.value.sum()]]), (a,), lambda g: (np.full(shape, g[0, 0]),)
    )


def mean(a: Node) -> Node:
    n = a.value.size
    shape = a.shape
    return a.tape.record(
        np.array([[a.value.sum() / n]]), (a,), lambda g: (np.full(shape, g[0, 0] / n),)
    )


def affine(W: Node, x: Node, b: Node) -> Node:
    return add(matmul(W, x), b)


_EWISE = {"add": add, "sub": sub, "mul": mul, "sin": sin, "square": square, "relu": relu, "exp": exp}


def ewise(op: str, *args) -> Node:
    """Dispatch an elementwise primitive by name."""
    try:
        fn = _EWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}; expected one of {sorted(_EWISE)}") from None
    return fn(*args)


def finite_diff_grad(f: Callable[[np.ndarray], float], theta, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a grid.

    ``f`` is called on a private copy of ``theta`` perturbed in place, one
    coordinate at a time; the caller's array is never touched.
    """
    if h <= 0:
        raise ContractError(f"step h must be positive, got {h}")
    theta = np.array(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    flat = theta.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(theta))
        flat[i] = orig - h
        fm = float(f(theta))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps near-zero gradients from turning round-off noise into
    large relative errors.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
