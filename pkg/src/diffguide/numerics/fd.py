"""Central finite differences, the independent oracle for every vjp."""

import numpy as np

__all__ = ["finite_diff_grad"]


def finite_diff_grad(fn, x, step=1e-5):
    """Gradient of scalar fn at x by central differences.

    Meant for float64 test fixtures only: cost is two evaluations per
    element and accuracy degrades in float32.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = float(fn(x))
        flat[i] = orig - step
        fm = float(fn(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return grad
