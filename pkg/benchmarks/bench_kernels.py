"""Compare the numba and numpy convolution kernel paths.

Run directly: python benchmarks/bench_kernels.py
The numba path is warmed up once before timing so JIT compilation is
not billed to the per-call numbers.
"""

import timeit

import numpy as np

from diffguide._kernels import _numpy_impl

try:
    from diffguide._kernels import _numba_impl
except ImportError:
    _numba_impl = None

CASES = [
    # (label, batch, c_in, c_out, side, k, dilation)
    ("inference 1x32ch 32px", 1, 32, 32, 32, 3, 2),
    ("training 32x32ch 32px", 32, 32, 32, 32, 3, 2),
    ("classifier 8x16ch 32px", 8, 3, 16, 32, 3, 1),
]


def bench(impl, label, n, ci, co, side, k, dil, repeats=5):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, ci, side, side))
    w = rng.standard_normal((co, ci, k, k))
    ct = rng.standard_normal((n, co, side, side))
    impl.conv2d(x, w, dil)  # warm-up (JIT compile on the numba path)
    impl.conv2d_input_grad(ct, w, dil)
    impl.conv2d_weight_grad(ct, x, k, k, dil)
    fwd = min(timeit.repeat(lambda: impl.conv2d(x, w, dil), number=1, repeat=repeats))
    din = min(timeit.repeat(lambda: impl.conv2d_input_grad(ct, w, dil), number=1, repeat=repeats))
    dw = min(timeit.repeat(lambda: impl.conv2d_weight_grad(ct, x, k, k, dil),
                           number=1, repeat=repeats))
    macs = n * ci * co * side * side * k * k
    print(f"  {label}: fwd {fwd * 1e3:8.2f} ms  dx {din * 1e3:8.2f} ms  "
          f"dw {dw * 1e3:8.2f} ms  ({macs / fwd / 1e9:.2f} GMAC/s fwd)")
    return fwd, din, dw


def main():
    impls = [("numpy", _numpy_impl)]
    if _numba_impl is not None:
        impls.append(("numba", _numba_impl))
    totals = {}
    for name, impl in impls:
        print(f"{name} path:")
        tot = 0.0
        for case in CASES:
            tot += sum(bench(impl, *case))
        totals[name] = tot
        print(f"  total {tot * 1e3:.2f} ms")
    if len(totals) == 2:
        print(f"numba speedup over numpy: {totals['numpy'] / totals['numba']:.2f}x")


if __name__ == "__main__":
    main()
