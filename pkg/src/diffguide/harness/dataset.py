"""Synthetic shapes: circles, squares and triangles on plain backgrounds.

Each image is derived from its own child seed, so image i is identical
no matter how many images are requested; labels cycle 0,1,2 and stay
balanced up to the remainder. Edges are anti-aliased by 4x4 coverage
supersampling, which keeps downsampling and blur tasks well-posed.
"""

import numpy as np

__all__ = ["CLASS_NAMES", "generate_shapes"]

CLASS_NAMES = ("circle", "square", "triangle")
_SS = 4  # supersampling factor per axis


def generate_shapes(n, seed, side=32):
    """Returns (images (n,3,side,side) float64 in [0,1], labels (n,) int64)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    images = np.empty((n, 3, side, side), dtype=np.float64)
    labels = np.arange(n, dtype=np.int64) % 3
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(i),)))
        images[i] = _render(rng, int(labels[i]), side)
    return images, labels


def _render(rng, label, side):
    bg = rng.uniform(0.0, 1.0, size=3)
    fg = rng.uniform(0.0, 1.0, size=3)
    while np.abs(fg - bg).max() < 0.3:
        fg = rng.uniform(0.0, 1.0, size=3)
    cy = side / 2 + rng.uniform(-3.0, 3.0)
    cx = side / 2 + rng.uniform(-3.0, 3.0)
    # subpixel centers of the supersampling grid
    grid = (np.arange(side * _SS) + 0.5) / _SS
    ys, xs = np.meshgrid(grid, grid, indexing="ij")
    if label == 0:
        r = rng.uniform(6.0, 11.0)
        inside = (ys - cy) ** 2 + (xs - cx) ** 2 <= r * r
    elif label == 1:
        h = rng.uniform(5.0, 10.0)
        inside = (np.abs(ys - cy) <= h) & (np.abs(xs - cx) <= h)
    else:
        inside = _triangle(ys, xs, cy, cx, rng.uniform(7.0, 12.0))
    cover = inside.reshape(side, _SS, side, _SS).mean(axis=(1, 3))
    return bg[:, None, None] + cover[None] * (fg - bg)[:, None, None]


def _triangle(ys, xs, cy, cx, radius):
    # equilateral, apex up; inside = same side of all three edges
    angles = np.array([-np.pi / 2, np.pi / 6, 5 * np.pi / 6])
    vy = cy + radius * np.sin(angles)
    vx = cx + radius * np.cos(angles)
    inside = np.ones_like(ys, dtype=bool)
    for k in range(3):
        j = (k + 1) % 3
        cross = (vx[j] - vx[k]) * (ys - vy[k]) - (vy[j] - vy[k]) * (xs - vx[k])
        inside &= cross >= 0
    return inside
