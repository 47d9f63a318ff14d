"""Pure-numpy reference implementations of the convolution kernels.

Convolutions are evaluated as a sum of shifted GEMMs (one tensordot per
kernel tap) instead of a single im2col buffer: same FLOPs, much smaller
working set, and BLAS still does the heavy lifting.
"""

import numpy as np

__all__ = ["conv2d", "conv2d_input_grad", "conv2d_weight_grad"]


def _pad_same(x, kh, kw, dilation):
    # 'same' zero padding for odd kernels; step size never shrinks the map
    ph = dilation * (kh // 2)
    pw = dilation * (kw // 2)
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))), ph, pw


def conv2d(x, w, dilation=1):
    """Correlate x (N,Ci,H,W) with w (Co,Ci,kh,kw), zero 'same' padding."""
    n, ci, h, wd = x.shape
    co, ci2, kh, kw = w.shape
    assert ci == ci2, (ci, ci2)
    assert kh % 2 == 1 and kw % 2 == 1, "only odd kernels supported"
    xp, _, _ = _pad_same(x, kh, kw, dilation)
    out = np.zeros((co, n, h, wd), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            view = xp[:, :, i * dilation : i * dilation + h, j * dilation : j * dilation + wd]
            out += np.tensordot(w[:, :, i, j], view, axes=([1], [1]))
    return np.ascontiguousarray(np.moveaxis(out, 0, 1))


def conv2d_input_grad(ct, w, dilation=1):
    """Gradient of conv2d wrt x given cotangent ct (N,Co,H,W)."""
    n, co, h, wd = ct.shape
    co2, ci, kh, kw = w.shape
    assert co == co2, (co, co2)
    ph = dilation * (kh // 2)
    pw = dilation * (kw // 2)
    dxp = np.zeros((ci, n, h + 2 * ph, wd + 2 * pw), dtype=ct.dtype)
    for i in range(kh):
        for j in range(kw):
            contrib = np.tensordot(w[:, :, i, j], ct, axes=([0], [1]))
            dxp[:, :, i * dilation : i * dilation + h, j * dilation : j * dilation + wd] += contrib
    dx = dxp[:, :, ph : ph + h, pw : pw + wd]
    return np.ascontiguousarray(np.moveaxis(dx, 0, 1))


def conv2d_weight_grad(ct, x, kh, kw, dilation=1):
    """Gradient of conv2d wrt w given cotangent ct (N,Co,H,W)."""
    n, co, h, wd = ct.shape
    n2, ci, h2, wd2 = x.shape
    assert (n, h, wd) == (n2, h2, wd2)
    xp, _, _ = _pad_same(x, kh, kw, dilation)
    dw = np.empty((co, ci, kh, kw), dtype=ct.dtype)
    for i in range(kh):
        for j in range(kw):
            view = xp[:, :, i * dilation : i * dilation + h, j * dilation : j * dilation + wd]
            dw[:, :, i, j] = np.tensordot(ct, view, axes=([0, 2, 3], [0, 2, 3]))
    return dw
