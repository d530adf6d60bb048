"""Synthetic fixtures: piecewise-constant (Mondrian) reflectance fields,
smooth illumination ramps, and random HDR images. Used by the demos and
the test suite; all generators are seeded and deterministic."""

from __future__ import annotations

import numpy as np

from .image import LinearImage


def mondrian_reflectance(height: int, width: int, rects: int = 12,
                         seed: int = 0, low: float = 0.1,
                         high: float = 0.9) -> LinearImage:
    """Piecewise-constant RGB reflectance: a base color overpainted with
    random axis-aligned rectangles of random colors."""
    rng = np.random.default_rng(seed)
    data = np.empty((height, width, 3))
    data[:] = rng.uniform(low, high, size=3)
    for _ in range(rects):
        y0 = rng.integers(0, height - 1)
        x0 = rng.integers(0, width - 1)
        y1 = rng.integers(y0 + 1, height + 1)
        x1 = rng.integers(x0 + 1, width + 1)
        data[y0:y1, x0:x1] = rng.uniform(low, high, size=3)
    return LinearImage(data)


def smooth_shading_ramp(height: int, width: int, seed: int = 0,
                        low: float = 0.2, high: float = 1.0) -> LinearImage:
    """Smooth gray shading: a tilted linear ramp plus a broad radial bump."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:height, :width].astype(np.float64)
    yy /= max(height - 1, 1)
    xx /= max(width - 1, 1)
    a, b = rng.uniform(-1, 1, size=2)
    cy, cx = rng.uniform(0.2, 0.8, size=2)
    bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / 0.5)
    field = a * xx + b * yy + 0.8 * bump
    field -= field.min()
    peak = field.max()
    if peak > 0:
        field /= peak
    return LinearImage((low + (high - low) * field)[:, :, None])


def mondrian_scene(height: int, width: int, seed: int = 0):
    """Reflectance x shading product scene; returns (image, gt_r, gt_s)."""
    refl = mondrian_reflectance(height, width, seed=seed)
    shad = smooth_shading_ramp(height, width, seed=seed + 1)
    img = LinearImage(refl.data * shad.data)
    return img, refl, shad


def random_hdr(height: int, width: int, seed: int = 0,
               dynamic_range: float = 1e3) -> LinearImage:
    """Log-uniform random radiance with a few hot pixels, masked borders."""
    rng = np.random.default_rng(seed)
    data = np.exp(rng.uniform(np.log(1.0 / dynamic_range),
                              np.log(dynamic_range),
                              size=(height, width, 3)))
    mask = np.ones((height, width), dtype=bool)
    n_invalid = rng.integers(0, max(2, height * width // 20))
    flat = rng.choice(height * width, size=n_invalid, replace=False)
    mask.ravel()[flat] = False
    return LinearImage(data, mask)
