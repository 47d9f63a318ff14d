"""Quality metrics: peak signal-to-noise ratio, structural similarity, residual."""

import math

import numpy as np
import pytest

from diffguide.metrics import psnr, residual, ssim
from diffguide.operators import LinearGuidanceLoss, MaskOperator


# --- psnr -------------------------------------------------------------------------

def test_identical_images_hit_the_infinity_sentinel():
    a = np.random.default_rng(0).random((3, 16, 16))
    assert psnr(a, a.copy()) == math.inf


def test_known_mse_gives_twenty_db():
    a = np.zeros((10, 10))
    b = np.full((10, 10), 0.1)  # mse = 0.01, peak = 1
    assert abs(psnr(a, b) - 20.0) < 1e-12


def test_psnr_matches_brute_force_formula():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.random((3, 8, 8))
        b = rng.random((3, 8, 8))
        peak = float(rng.uniform(0.5, 2.0))
        se = 0.0
        for x, y in zip(a.ravel(), b.ravel()):
            se += (x - y) ** 2
        want = 10.0 * math.log10(peak**2 / (se / a.size))
        assert abs(psnr(a, b, peak) - want) <= 1e-9


def test_psnr_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 2)), np.zeros((3, 2)))


def test_psnr_strictly_decreases_with_noise_level():
    rng = np.random.default_rng(2)
    a = rng.random((3, 16, 16))
    noise = rng.standard_normal(a.shape)
    vals = [psnr(a, a + s * noise) for s in (0.01, 0.05, 0.1)]
    assert vals[0] > vals[1] > vals[2]


# --- ssim -------------------------------------------------------------------------

def test_self_similarity_is_exactly_one():
    a = np.random.default_rng(3).random((3, 16, 16))
    assert ssim(a, a.copy()) == 1.0


def test_anticorrelated_images_score_negative():
    # zero-mean pattern: every window's luminance term is tiny, so the
    # negative structure term controls the sign
    i, j = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
    a = 0.5 * ((-1.0) ** (i + j))
    assert ssim(a, -a) < 0.0


def test_window_must_fit_inside_the_image():
    with pytest.raises(ValueError):
        ssim(np.zeros((4, 4)), np.zeros((4, 4)), win=8)


def test_ssim_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ssim(np.zeros((8, 8)), np.zeros((8, 9)))


def test_ssim_is_symmetric():
    rng = np.random.default_rng(5)
    a = rng.random((16, 16))
    b = rng.random((16, 16))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-15)


def _reference_ssim(a, b, peak=1.0, win=8):
    """Plain double-loop evaluation of the mean local similarity index."""
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - win + 1):
        for j in range(w - win + 1):
            pa = a[i:i + win, j:j + win]
            pb = b[i:i + win, j:j + win]
            mu_a, mu_b = pa.mean(), pb.mean()
            var_a = ((pa - mu_a) ** 2).mean()
            var_b = ((pb - mu_b) ** 2).mean()
            cov = ((pa - mu_a) * (pb - mu_b)).mean()
            num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
            den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
            vals.append(num / den)
    return float(np.mean(vals))


def test_ssim_matches_direct_reference_on_fixed_pairs():
    rng = np.random.default_rng(6)
    pairs = []
    base = rng.random((16, 16))
    pairs.append((base, base + 0.05 * rng.standard_normal((16, 16))))
    pairs.append((rng.random((16, 16)), rng.random((16, 16))))
    pairs.append((np.linspace(0, 1, 256).reshape(16, 16),
                  np.linspace(1, 0, 256).reshape(16, 16)))
    smooth = np.outer(np.hanning(16), np.hanning(16))
    pairs.append((smooth, smooth * 0.5 + 0.2))
    pairs.append((base, np.clip(base * 1.3 - 0.1, 0, 1)))
    for a, b in pairs:
        assert abs(ssim(a, b) - _reference_ssim(a, b)) <= 1e-6


def test_multichannel_ssim_averages_channels():
    rng = np.random.default_rng(7)
    a = rng.random((3, 16, 16))
    b = rng.random((3, 16, 16))
    per = [ssim(a[c], b[c]) for c in range(3)]
    assert ssim(a, b) == pytest.approx(np.mean(per), abs=1e-12)


# --- measurement residual -----------------------------------------------------------

def test_residual_is_zero_on_an_exact_fit():
    mask = np.ones((8, 8))
    op = MaskOperator(mask)
    x = np.random.default_rng(8).random((3, 8, 8))
    loss = LinearGuidanceLoss(op, op.apply(x))
    assert residual(loss.value(x), op.apply(x)) == 0.0


def test_residual_matches_the_measurement_noise_floor():
    rng = np.random.default_rng(9)
    mask = np.ones((32, 32))
    op = MaskOperator(mask)
    x = rng.random((3, 32, 32))
    vals = []
    for _ in range(200):
        y = op.apply(x) + 0.05 * rng.standard_normal((3, 32, 32))
        vals.append(residual(LinearGuidanceLoss(op, y).value(x), y))
    assert abs(np.mean(vals) - 0.0025) < 3e-4


def test_residual_decreases_under_gradient_descent():
    rng = np.random.default_rng(10)
    mask = (rng.random((8, 8)) > 0.3).astype(np.float64)
    op = MaskOperator(mask)
    target = rng.random((3, 8, 8))
    y = op.apply(target)
    loss = LinearGuidanceLoss(op, y)
    x = rng.random((3, 8, 8))
    vals = []
    for _ in range(10):
        v, g = loss.value_and_grad(x)
        vals.append(residual(v, y))
        x = x - 0.1 * g
    assert all(b < a for a, b in zip(vals, vals[1:]))
