"""Restoration quality metrics."""

import math

import numpy as np

__all__ = ["psnr", "ssim", "residual"]


def psnr(a, b, peak=1.0):
    """10 log10(peak^2 / mse); math.inf when the images are identical."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _window_stats(x, win):
    """Mean/second-moment over all valid win x win windows via stride tricks."""
    from numpy.lib.stride_tricks import sliding_window_view

    w = sliding_window_view(x, (win, win))
    mu = w.mean(axis=(-2, -1))
    sq = (w * w).mean(axis=(-2, -1))
    return w, mu, sq


def ssim(a, b, peak=1.0, win=8):
    """Mean local SSIM with a uniform win x win window.

    Channel-first images (C,H,W) are averaged over channels; plain (H,W)
    arrays are treated as one channel. Windows slide with stride 1 over
    valid positions only.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[None]
        b = b[None]
    if a.shape[-1] < win or a.shape[-2] < win:
        raise ValueError("image smaller than the SSIM window")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    vals = []
    for ch in range(a.shape[0]):
        wa, mu_a, sq_a = _window_stats(a[ch], win)
        wb, mu_b, sq_b = _window_stats(b[ch], win)
        var_a = sq_a - mu_a * mu_a
        var_b = sq_b - mu_b * mu_b
        cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
        num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
        den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        vals.append(float(np.mean(num / den)))
    return float(np.mean(vals))


def residual(loss_value, y):
    """Measurement-consistency residual: loss normalized by the size of y."""
    return float(loss_value) / np.asarray(y).size
