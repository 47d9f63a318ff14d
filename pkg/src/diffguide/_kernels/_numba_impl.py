"""Numba-jitted convolution kernels.

Loop bodies mirror the numpy implementations tap for tap so both paths
agree to floating-point roundoff. fastmath stays off: accumulation order
must be deterministic for the reproducibility contract.
"""

import numpy as np
from numba import njit

__all__ = ["conv2d", "conv2d_input_grad", "conv2d_weight_grad"]


@njit(cache=True)
def _conv2d_padded(xp, w, dilation, h, wd):
    n = xp.shape[0]
    co, ci, kh, kw = w.shape
    out = np.zeros((n, co, h, wd), dtype=xp.dtype)
    for b in range(n):
        for o in range(co):
            for c in range(ci):
                for i in range(kh):
                    for j in range(kw):
                        wv = w[o, c, i, j]
                        if wv == 0.0:
                            continue
                        oy = i * dilation
                        ox = j * dilation
                        for y in range(h):
                            for x in range(wd):
                                out[b, o, y, x] += wv * xp[b, c, y + oy, x + ox]
    return out


@njit(cache=True)
def _input_grad_padded(ct, w, dilation, ph, pw):
    n, co, h, wd = ct.shape
    ci = w.shape[1]
    kh = w.shape[2]
    kw = w.shape[3]
    dxp = np.zeros((n, ci, h + 2 * ph, wd + 2 * pw), dtype=ct.dtype)
    for b in range(n):
        for o in range(co):
            for c in range(ci):
                for i in range(kh):
                    for j in range(kw):
                        wv = w[o, c, i, j]
                        if wv == 0.0:
                            continue
                        oy = i * dilation
                        ox = j * dilation
                        for y in range(h):
                            for x in range(wd):
                                dxp[b, c, y + oy, x + ox] += wv * ct[b, o, y, x]
    return dxp


@njit(cache=True)
def _weight_grad_padded(ct, xp, kh, kw, dilation):
    n, co, h, wd = ct.shape
    ci = xp.shape[1]
    dw = np.zeros((co, ci, kh, kw), dtype=ct.dtype)
    for b in range(n):
        for o in range(co):
            for c in range(ci):
                for i in range(kh):
                    for j in range(kw):
                        oy = i * dilation
                        ox = j * dilation
                        acc = 0.0
                        for y in range(h):
                            for x in range(wd):
                                acc += ct[b, o, y, x] * xp[b, c, y + oy, x + ox]
                        dw[o, c, i, j] += acc
    return dw


def _pad_same(x, kh, kw, dilation):
    ph = dilation * (kh // 2)
    pw = dilation * (kw // 2)
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))), ph, pw


def conv2d(x, w, dilation=1):
    kh, kw = w.shape[2], w.shape[3]
    assert kh % 2 == 1 and kw % 2 == 1, "only odd kernels supported"
    xp, _, _ = _pad_same(x, kh, kw, dilation)
    return _conv2d_padded(np.ascontiguousarray(xp), w, dilation, x.shape[2], x.shape[3])


def conv2d_input_grad(ct, w, dilation=1):
    kh, kw = w.shape[2], w.shape[3]
    ph = dilation * (kh // 2)
    pw = dilation * (kw // 2)
    dxp = _input_grad_padded(np.ascontiguousarray(ct), w, dilation, ph, pw)
    h, wd = ct.shape[2], ct.shape[3]
    return np.ascontiguousarray(dxp[:, :, ph : ph + h, pw : pw + wd])


def conv2d_weight_grad(ct, x, kh, kw, dilation=1):
    xp, _, _ = _pad_same(x, kh, kw, dilation)
    return _weight_grad_padded(np.ascontiguousarray(ct), np.ascontiguousarray(xp), kh, kw, dilation)
