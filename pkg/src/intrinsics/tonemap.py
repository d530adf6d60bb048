"""Percentile-anchored gamma tone mapping from linear HDR to LDR.

The map anchors a chosen percentile of the per-pixel intensity to a fixed
output value, so at most (1 - percentile) of the valid pixels can saturate
and the result is invariant to global rescaling of the radiance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import LinearImage, intensity


@dataclass
class ToneMapParams:
    gamma: float = 1.0 / 2.2
    percentile: float = 0.90
    anchor: float = 0.8

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not 0 < self.percentile < 1:
            raise ValueError("percentile must lie in (0, 1)")
        if not 0 < self.anchor <= 1:
            raise ValueError("anchor must lie in (0, 1]")


@dataclass
class ToneMapStats:
    percentile_value: float  # r_p
    alpha: float
    saturated_fraction: float  # fraction of valid pixels >= 1 before clipping


def percentile_intensity(hdr: LinearImage, percentile: float) -> float:
    """Nearest-rank-low percentile of the channel-mean intensity over valid
    pixels: sorted value at index floor(percentile * (n - 1))."""
    vals = intensity(hdr).data[:, :, 0][hdr.mask]
    if vals.size == 0:
        raise ValueError("degenerate radiance")
    vals = np.sort(vals)
    return float(vals[int(np.floor(percentile * (vals.size - 1)))])


def tonemap_with_stats(hdr: LinearImage, params: ToneMapParams = None):
    """Tone map and also report (r_p, alpha, saturated fraction).

    The output equals clip(alpha * x**gamma, 0, 1) with
    alpha = anchor / r_p**gamma, but is computed as
    anchor * (x / r_p)**gamma so that globally rescaling the input cancels
    exactly in the division and the result is unchanged.
    """
    if params is None:
        params = ToneMapParams()
    r_p = percentile_intensity(hdr, params.percentile)
    if r_p <= 0:
        raise ValueError("degenerate radiance")

    data = np.where(hdr.mask[:, :, None], hdr.data, 0.0)
    mapped = params.anchor * (data / r_p) ** params.gamma
    out = LinearImage(np.clip(mapped, 0.0, 1.0), hdr.mask.copy())

    inten = intensity(hdr).data[:, :, 0][hdr.mask]
    pre_clip = params.anchor * (inten / r_p) ** params.gamma
    sat = float(np.mean(pre_clip >= 1.0))
    alpha = params.anchor / r_p**params.gamma
    return out, ToneMapStats(r_p, float(alpha), sat)


def tonemap(hdr: LinearImage, params: ToneMapParams = None) -> LinearImage:
    """Map a linear HDR image to LDR values in [0, 1]."""
    out, _ = tonemap_with_stats(hdr, params)
    return out
