"""Degradation operators with analytic adjoints, plus the guidance losses.

Every operator A is linear and exposes apply/adjoint such that
<A x, u> == <x, A^T u> holds to roundoff; guidance never differentiates
through these numerically. Images are single (C,H,W) float arrays.
"""

import numpy as np

from .numerics import Var, backward

__all__ = [
    "MaskOperator",
    "DownsampleOperator",
    "BlurOperator",
    "GrayscaleOperator",
    "LinearGuidanceLoss",
    "ClassifierGuidanceLoss",
    "gaussian_kernel",
]

REC601 = (0.299, 0.587, 0.114)


class MaskOperator:
    """Pixelwise mask: 1 keeps a pixel, 0 hides it. Self-adjoint."""

    def __init__(self, mask):
        mask = np.asarray(mask, dtype=np.float64)
        if mask.ndim != 2:
            raise ValueError("mask must be (H,W)")
        if not np.isin(mask, (0.0, 1.0)).all():
            raise ValueError("mask entries must be 0 or 1")
        self.mask = mask

    def apply(self, x):
        return x * self.mask

    def adjoint(self, u):
        return u * self.mask

    def out_shape(self, in_shape):
        return in_shape

    def translated(self, dy, dx):
        """Mask moved with the image under a zero-fill shift."""
        return MaskOperator(shift_image(self.mask[None], dy, dx)[0])


class DownsampleOperator:
    """Box average by an integer factor; adjoint replicates and divides."""

    def __init__(self, factor):
        if factor < 1 or int(factor) != factor:
            raise ValueError("factor must be a positive integer")
        self.factor = int(factor)

    def apply(self, x):
        c, h, w = x.shape
        s = self.factor
        if h % s or w % s:
            raise ValueError("image size must be divisible by the factor")
        return x.reshape(c, h // s, s, w // s, s).mean(axis=(2, 4))

    def adjoint(self, u):
        s = self.factor
        return np.repeat(np.repeat(u, s, axis=1), s, axis=2) / (s * s)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        return (c, h // self.factor, w // self.factor)


class BlurOperator:
    """Gaussian blur with reflect padding.

    Implemented as an explicit gather over precomputed reflected indices,
    so the adjoint is the exact scatter with the same index table rather
    than an approximate 'correlate with the flipped kernel'.
    """

    def __init__(self, size, sigma, side):
        if size % 2 != 1 or size < 1:
            raise ValueError("kernel size must be odd")
        self.kernel = gaussian_kernel(size, sigma)
        self.size = size
        self.side = side
        r = size // 2
        idx = np.arange(side)
        # reflect (symmetric) index map per tap offset
        self._taps = []
        for di in range(-r, r + 1):
            p = idx + di
            p = np.where(p < 0, -p - 1, p)
            p = np.where(p >= side, 2 * side - p - 1, p)
            self._taps.append(p)

    def apply(self, x):
        c, h, w = x.shape
        assert h == self.side and w == self.side
        out = np.zeros_like(x)
        k = self.kernel
        for i, ry in enumerate(self._taps):
            for j, rx in enumerate(self._taps):
                out += k[i, j] * x[:, ry[:, None], rx[None, :]]
        return out

    def adjoint(self, u):
        c, h, w = u.shape
        out = np.zeros_like(u)
        k = self.kernel
        ch = np.arange(c)[:, None, None]
        for i, ry in enumerate(self._taps):
            for j, rx in enumerate(self._taps):
                np.add.at(out, (ch, ry[:, None], rx[None, :]), k[i, j] * u)
        return out

    def out_shape(self, in_shape):
        return in_shape


class GrayscaleOperator:
    """Channel-weighted luminance; adjoint spreads by the same weights."""

    def __init__(self, weights=REC601):
        w = np.asarray(weights, dtype=np.float64)
        if not np.isclose(w.sum(), 1.0):
            raise ValueError("weights must sum to 1")
        self.weights = w

    def apply(self, x):
        return np.tensordot(self.weights, x, axes=([0], [0]))[None]

    def adjoint(self, u):
        return self.weights[:, None, None] * u[0]

    def out_shape(self, in_shape):
        c, h, w = in_shape
        return (1, h, w)


def gaussian_kernel(size, sigma):
    r = size // 2
    g = np.exp(-0.5 * (np.arange(-r, r + 1) / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def shift_image(x, dy, dx):
    """Integer shift with zero fill; linear and exactly invertible on its support."""
    if dy == 0 and dx == 0:
        return x
    out = np.zeros_like(x)
    c, h, w = x.shape
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[:, ys, xs] = x[:, ys_src, xs_src]
    return out


class LinearGuidanceLoss:
    """Squared residual ||y - A(x)||^2 against a fixed measurement y."""

    def __init__(self, op, y, noise_std=0.0):
        self.op = op
        self.y = np.asarray(y, dtype=np.float64)
        self.noise_std = float(noise_std)

    def value(self, x):
        r = self.op.apply(x) - self.y
        return float(np.sum(r * r))

    def grad(self, x):
        r = self.op.apply(x) - self.y
        return 2.0 * self.op.adjoint(r)

    def value_and_grad(self, x):
        r = self.op.apply(x) - self.y
        return float(np.sum(r * r)), 2.0 * self.op.adjoint(r)


class ClassifierGuidanceLoss:
    """Cross-entropy of a frozen classifier at the denoised estimate."""

    def __init__(self, model, target):
        self.model = model
        self.target = int(target)

    def value(self, x):
        v, _ = self.value_and_grad(x)
        return v

    def grad(self, x):
        _, g = self.value_and_grad(x)
        return g

    def value_and_grad(self, x):
        vals, grads = self.value_and_grad_batch(x[None])
        return float(vals[0]), grads[0]

    def value_and_grad_batch(self, xs):
        """One graph for a whole batch; rows are independent."""
        from .numerics import cross_entropy_with_logits

        xv = Var(np.asarray(xs, dtype=np.float64))
        logits = self.model.logits_var(xv)
        targets = np.full(xs.shape[0], self.target, dtype=np.int64)
        lv = logits.value
        m = lv.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.sum(np.exp(lv - m), axis=1))
        per_row = lse - lv[np.arange(lv.shape[0]), targets]
        total = cross_entropy_with_logits(logits, targets)
        backward(total, np.asarray(1.0))
        return per_row, xv.grad
