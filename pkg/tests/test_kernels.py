"""Cross-implementation checks for the convolution kernels.

Both backends are imported directly (not through the env-flag dispatcher)
so the comparison runs regardless of which one the package selected.
"""

import numpy as np
import pytest

from diffguide._kernels import conv2d as dispatched_conv2d
from diffguide._kernels import _numpy_impl as knp

try:
    from diffguide._kernels import _numba_impl as knb
except ImportError:
    knb = None

needs_numba = pytest.mark.skipif(knb is None, reason="numba not installed")


def _naive_conv2d(x, w, dilation=1):
    """Nested-loop same-size zero-padded convolution (correlation form)."""
    n, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    pad_h = dilation * (kh - 1) // 2
    pad_w = dilation * (kw - 1) // 2
    out = np.zeros((n, co, h, wd), dtype=np.float64)
    for b in range(n):
        for o in range(co):
            for y in range(h):
                for xx in range(wd):
                    acc = 0.0
                    for c in range(ci):
                        for ky in range(kh):
                            for kx in range(kw):
                                yy = y + dilation * ky - pad_h
                                xc = xx + dilation * kx - pad_w
                                if 0 <= yy < h and 0 <= xc < wd:
                                    acc += x[b, c, yy, xc] * w[o, c, ky, kx]
                    out[b, o, y, xx] = acc
    return out


@pytest.mark.parametrize("dilation", [1, 2, 3])
def test_numpy_forward_matches_naive_reference(dilation):
    rng = np.random.default_rng(7)
    x = rng.standard_normal((2, 3, 7, 6))
    w = rng.standard_normal((4, 3, 3, 3))
    got = knp.conv2d(x, w, dilation=dilation)
    want = _naive_conv2d(x, w, dilation=dilation)
    assert np.max(np.abs(got - want)) < 1e-12


@needs_numba
@pytest.mark.parametrize("dilation", [1, 2, 3])
def test_backends_agree_forward(dilation):
    rng = np.random.default_rng(11)
    x = rng.standard_normal((2, 4, 9, 9))
    w = rng.standard_normal((5, 4, 3, 3))
    a = knp.conv2d(x, w, dilation=dilation)
    b = knb.conv2d(x, w, dilation=dilation)
    assert np.max(np.abs(a - b)) < 1e-12


@needs_numba
@pytest.mark.parametrize("dilation", [1, 2])
def test_backends_agree_gradients(dilation):
    rng = np.random.default_rng(13)
    x = rng.standard_normal((2, 3, 8, 8))
    w = rng.standard_normal((4, 3, 3, 3))
    ct = rng.standard_normal((2, 4, 8, 8))
    gi_a = knp.conv2d_input_grad(ct, w, dilation=dilation)
    gi_b = knb.conv2d_input_grad(ct, w, dilation=dilation)
    gw_a = knp.conv2d_weight_grad(ct, x, 3, 3, dilation=dilation)
    gw_b = knb.conv2d_weight_grad(ct, x, 3, 3, dilation=dilation)
    assert np.max(np.abs(gi_a - gi_b)) < 1e-12
    assert np.max(np.abs(gw_a - gw_b)) < 1e-12


@pytest.mark.parametrize("impl", ["numpy", "numba"])
@pytest.mark.parametrize("dilation", [1, 2])
def test_gradients_are_true_adjoints(impl, dilation):
    """<conv(x), ct> == <x, input_grad(ct)> and likewise for the weights."""
    if impl == "numba":
        if knb is None:
            pytest.skip("numba not installed")
        mod = knb
    else:
        mod = knp
    rng = np.random.default_rng(17)
    x = rng.standard_normal((2, 3, 8, 8))
    w = rng.standard_normal((4, 3, 3, 3))
    ct = rng.standard_normal((2, 4, 8, 8))
    fwd = np.vdot(mod.conv2d(x, w, dilation=dilation), ct)
    via_input = np.vdot(x, mod.conv2d_input_grad(ct, w, dilation=dilation))
    via_weight = np.vdot(w, mod.conv2d_weight_grad(ct, x, 3, 3, dilation=dilation))
    assert abs(fwd - via_input) < 1e-10 * max(1.0, abs(fwd))
    assert abs(fwd - via_weight) < 1e-10 * max(1.0, abs(fwd))


def test_dispatcher_matches_numpy_impl():
    rng = np.random.default_rng(19)
    x = rng.standard_normal((1, 2, 6, 6))
    w = rng.standard_normal((3, 2, 3, 3))
    # bit-identical when the env flag selects numpy (the test default);
    # within summation-order noise when numba is active
    assert np.max(np.abs(dispatched_conv2d(x, w) - knp.conv2d(x, w))) < 1e-12
