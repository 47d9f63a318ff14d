"""Reverse-mode automatic differentiation over a small, fixed op vocabulary.

There is no general tape or operator overloading: every differentiable
computation in this package is built from the functions below (affine,
conv2d, relu, mean_pool, mul, add, concat, sum, squared_l2,
cross_entropy_with_logits, embedding_lookup, plus reshape for shape
plumbing). Keeping the vocabulary closed keeps every vector-Jacobian
product small enough to check against finite differences.

A Var wraps a numpy array and remembers, per parent, the callable that
maps the output cotangent to that parent's cotangent contribution.
Any non-finite value produced by an op or a vjp raises NonFiniteError
instead of propagating.
"""

import numpy as np

from .. import _kernels as K

__all__ = [
    "NonFiniteError",
    "Var",
    "backward",
    "vjp",
    "forward",
    "affine",
    "conv2d",
    "relu",
    "mean_pool",
    "mul",
    "add",
    "concat",
    "sum_",
    "squared_l2",
    "cross_entropy_with_logits",
    "embedding_lookup",
    "reshape",
]


class NonFiniteError(FloatingPointError):
    """An operation produced NaN or Inf."""


def _check_finite(a, where):
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"non-finite values in {where}")
    return a


class Var:
    """Node in a reverse-mode graph: a value plus vjp edges to parents."""

    __slots__ = ("value", "parents", "grad", "stop_gradient")

    def __init__(self, value, parents=(), stop_gradient=False):
        self.value = _check_finite(np.asarray(value), "Var value")
        self.parents = parents
        self.grad = None
        self.stop_gradient = stop_gradient

    @property
    def shape(self):
        return self.value.shape


def _topo(root):
    # iterative postorder; graphs here are small but can be deep-ish
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen and not parent.stop_gradient:
                stack.append((parent, False))
    return order


def backward(root, cotangent=None):
    """Populate .grad on every reachable Var; returns nothing."""
    if cotangent is None:
        cotangent = np.ones_like(root.value)
    cotangent = np.asarray(cotangent, dtype=root.value.dtype)
    assert cotangent.shape == root.value.shape, (cotangent.shape, root.value.shape)
    order = _topo(root)
    for v in order:
        v.grad = None
    root.grad = _check_finite(cotangent, "cotangent")
    for v in reversed(order):
        if v.grad is None:
            continue
        for parent, vjp_fn in v.parents:
            if parent.stop_gradient:
                continue
            g = _check_finite(vjp_fn(v.grad), "vjp output")
            parent.grad = g if parent.grad is None else parent.grad + g


def vjp(fn, inputs, cotangent):
    """Vector-Jacobian product of fn at inputs; returns one grad per input."""
    vars_ = tuple(Var(x) for x in inputs)
    out = fn(*vars_)
    backward(out, cotangent)
    return tuple(np.zeros_like(v.value) if v.grad is None else v.grad for v in vars_)


def forward(fn, inputs):
    """Evaluate fn on raw arrays through the op vocabulary."""
    return fn(*(Var(x) for x in inputs)).value


def _unbroadcast(grad, shape):
    # reduce a broadcasted gradient back to the operand's shape
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def affine(x, w, b):
    """x (N,D) @ w (D,M) + b (M)."""
    xv, wv, bv = x.value, w.value, b.value
    out = Var(xv @ wv + bv, parents=(
        (x, lambda ct: ct @ wv.T),
        (w, lambda ct: xv.T @ ct),
        (b, lambda ct: ct.sum(axis=0)),
    ))
    return out


def conv2d(x, w, b, dilation=1):
    """'same' zero-padded correlation, x (N,Ci,H,W), w (Co,Ci,kh,kw), b (Co)."""
    xv, wv, bv = x.value, w.value, b.value
    kh, kw = wv.shape[2], wv.shape[3]
    val = K.conv2d(xv, wv, dilation) + bv[None, :, None, None]
    return Var(val, parents=(
        (x, lambda ct: K.conv2d_input_grad(ct, wv, dilation)),
        (w, lambda ct: K.conv2d_weight_grad(ct, xv, kh, kw, dilation)),
        (b, lambda ct: ct.sum(axis=(0, 2, 3))),
    ))


def relu(x):
    mask = x.value > 0
    return Var(np.where(mask, x.value, 0.0), parents=((x, lambda ct: ct * mask),))


def mean_pool(x, k):
    """Non-overlapping k x k average over the trailing two axes."""
    n, c, h, w = x.value.shape
    assert h % k == 0 and w % k == 0, (h, w, k)
    val = x.value.reshape(n, c, h // k, k, w // k, k).mean(axis=(3, 5))

    def _vjp(ct):
        up = np.repeat(np.repeat(ct, k, axis=2), k, axis=3)
        return up / (k * k)

    return Var(val, parents=((x, _vjp),))


def mul(a, b):
    av, bv = a.value, b.value
    return Var(av * bv, parents=(
        (a, lambda ct: _unbroadcast(ct * bv, av.shape)),
        (b, lambda ct: _unbroadcast(ct * av, bv.shape)),
    ))


def add(a, b):
    av, bv = a.value, b.value
    return Var(av + bv, parents=(
        (a, lambda ct: _unbroadcast(ct, av.shape)),
        (b, lambda ct: _unbroadcast(ct, bv.shape)),
    ))


def concat(vars_, axis):
    vals = [v.value for v in vars_]
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum([0] + sizes)

    def _slicer(i):
        def _vjp(ct):
            sl = [slice(None)] * ct.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            return ct[tuple(sl)]

        return _vjp

    return Var(np.concatenate(vals, axis=axis),
               parents=tuple((v, _slicer(i)) for i, v in enumerate(vars_)))


def sum_(x):
    xv = x.value
    return Var(np.sum(xv), parents=((x, lambda ct: np.broadcast_to(ct, xv.shape).astype(xv.dtype)),))


def squared_l2(x):
    xv = x.value
    return Var(np.sum(xv * xv), parents=((x, lambda ct: 2.0 * ct * xv),))


def cross_entropy_with_logits(logits, targets):
    """Sum over rows of -log softmax(logits)[target]; targets is an int array."""
    lv = logits.value
    targets = np.asarray(targets)
    assert lv.ndim == 2 and targets.shape == (lv.shape[0],)
    m = lv.max(axis=1, keepdims=True)
    z = lv - m
    lse = m[:, 0] + np.log(np.sum(np.exp(z), axis=1))
    picked = lv[np.arange(lv.shape[0]), targets]
    val = np.sum(lse - picked)

    def _vjp(ct):
        soft = np.exp(z) / np.sum(np.exp(z), axis=1, keepdims=True)
        soft[np.arange(lv.shape[0]), targets] -= 1.0
        return ct * soft

    return Var(val, parents=((logits, _vjp),))


def embedding_lookup(table, idx):
    """Row gather from table (V,D) by integer idx (N,)."""
    tv = table.value
    idx = np.asarray(idx)

    def _vjp(ct):
        dt = np.zeros_like(tv)
        np.add.at(dt, idx, ct)
        return dt

    return Var(tv[idx], parents=((table, _vjp),))


def reshape(x, shape):
    old = x.value.shape
    return Var(x.value.reshape(shape), parents=((x, lambda ct: ct.reshape(old)),))
