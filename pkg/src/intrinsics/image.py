"""Core image containers: masked linear/log images, pyramids, gradients.

Images are float64 arrays of shape (H, W, C) with a per-pixel boolean
validity mask of shape (H, W). All operations here are pure and ignore
the values stored at invalid pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Guard used whenever a linear sample is mapped to the log domain, so that
# zero-valued valid pixels stay finite.
LOG_EPS = 1e-6


def _normalize(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    if data.ndim != 3:
        raise ValueError(f"image data must be 2-D or 3-D, got shape {data.shape}")
    if data.shape[2] not in (1, 2, 3):
        raise ValueError(f"unsupported channel count {data.shape[2]}")
    return data


def _default_mask(data: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return np.ones(data.shape[:2], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != data.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} != image grid {data.shape[:2]}")
    return mask


@dataclass
class LinearImage:
    """Multi-channel image in the linear radiance/intensity domain.

    Valid samples are finite and >= 0. Channel count is normally 1 or 3
    (2 only arises for chromaticity products).
    """

    data: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = _normalize(self.data)
        self.mask = _default_mask(self.data, self.mask)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())

    def copy(self) -> "LinearImage":
        return LinearImage(self.data.copy(), self.mask.copy())

    def to_log(self) -> "LogImage":
        """Natural log with an epsilon floor for zero-valued valid pixels."""
        return LogImage(np.log(np.maximum(self.data, LOG_EPS)), self.mask.copy())


@dataclass
class LogImage:
    """Image whose samples live in the natural-log domain."""

    data: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = _normalize(self.data)
        self.mask = _default_mask(self.data, self.mask)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())

    def to_linear(self) -> LinearImage:
        return LinearImage(np.exp(self.data), self.mask.copy())


@dataclass
class Decomposition:
    """Paired log-reflectance and log-shading fields on a shared grid.

    log_r has shape (H, W, Cr), log_s has shape (H, W, Cs); Cs is typically
    1 (gray shading) while Cr is 3.
    """

    log_r: np.ndarray
    log_s: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.log_r = _normalize(self.log_r)
        self.log_s = _normalize(self.log_s)
        self.mask = _default_mask(self.log_r, self.mask)
        if self.log_s.shape[:2] != self.log_r.shape[:2]:
            raise ValueError("log_r and log_s grids differ")

    @property
    def shape(self):
        return self.mask.shape

    def reflectance(self) -> LinearImage:
        return LinearImage(np.exp(self.log_r), self.mask.copy())

    def shading(self) -> LinearImage:
        return LinearImage(np.exp(self.log_s), self.mask.copy())


@dataclass
class GradientField:
    """Forward differences dx, dy with zero-padded boundaries.

    dx is zero on the last column and dy zero on the last row. An interior
    sample is valid iff both participating pixels are valid; a boundary
    sample (which is identically zero) is valid iff its own pixel is.
    """

    dx: np.ndarray
    dy: np.ndarray
    valid_dx: np.ndarray
    valid_dy: np.ndarray


@dataclass
class Pyramid:
    """Image pyramid; level 1 is the input, each next level a 2x2 box
    average of valid pixels with floor-halved dimensions."""

    levels: list  # of LinearImage or LogImage

    def __len__(self) -> int:
        return len(self.levels)

    def valid_counts(self) -> list:
        return [lv.valid_count for lv in self.levels]


def _box_downsample(data: np.ndarray, mask: np.ndarray):
    h2, w2 = data.shape[0] // 2, data.shape[1] // 2
    d = data[: 2 * h2, : 2 * w2]
    m = mask[: 2 * h2, : 2 * w2]
    dm = np.where(m[:, :, None], d, 0.0)
    s = dm[0::2, 0::2] + dm[0::2, 1::2] + dm[1::2, 0::2] + dm[1::2, 1::2]
    n = (m[0::2, 0::2].astype(np.int64) + m[0::2, 1::2] + m[1::2, 0::2]
         + m[1::2, 1::2])
    out = s / np.maximum(n, 1)[:, :, None]
    return out, n >= 1


def box_upsample_adjoint(grad_coarse: np.ndarray, fine_mask: np.ndarray) -> np.ndarray:
    """Adjoint of the valid-pixel 2x2 box average (spreads cotangents back)."""
    h, w = fine_mask.shape
    h2, w2 = h // 2, w // 2
    m = fine_mask[: 2 * h2, : 2 * w2]
    n = (m[0::2, 0::2].astype(np.int64) + m[0::2, 1::2] + m[1::2, 0::2]
         + m[1::2, 1::2])
    g = grad_coarse / np.maximum(n, 1)[:, :, None]
    out = np.zeros((h, w, grad_coarse.shape[2]), dtype=np.float64)
    sub = out[: 2 * h2, : 2 * w2]
    sub[0::2, 0::2] = g
    sub[0::2, 1::2] = g
    sub[1::2, 0::2] = g
    sub[1::2, 1::2] = g
    out *= fine_mask[:, :, None]
    return out


def build_pyramid(img, max_levels: int) -> Pyramid:
    """Build the box-average pyramid of a LinearImage or LogImage.

    Downsampling continues while the current level is at least 4x4 and
    fewer than max_levels levels exist. A coarse pixel is valid iff at
    least one of its 2x2 sources is.
    """
    if img.height == 0 or img.width == 0:
        raise ValueError("empty input")
    if max_levels < 1:
        raise ValueError("max_levels must be >= 1")
    cls = type(img)
    levels = [img]
    while len(levels) < max_levels:
        cur = levels[-1]
        if min(cur.height, cur.width) < 4:
            break
        data, mask = _box_downsample(cur.data, cur.mask)
        levels.append(cls(data, mask))
    return Pyramid(levels)


def gradients(img) -> GradientField:
    """Forward-difference gradient field of a LinearImage or LogImage."""
    d, m = img.data, img.mask
    dx = np.zeros_like(d)
    dy = np.zeros_like(d)
    dx[:, :-1] = d[:, 1:] - d[:, :-1]
    dy[:-1, :] = d[1:, :] - d[:-1, :]
    valid_dx = m.copy()
    valid_dx[:, :-1] = m[:, :-1] & m[:, 1:]
    valid_dy = m.copy()
    valid_dy[:-1, :] = m[:-1, :] & m[1:, :]
    return GradientField(dx, dy, valid_dx, valid_dy)


def gradient_adjoint(tx: np.ndarray, ty: np.ndarray) -> np.ndarray:
    """Adjoint of the forward-difference operator.

    tx, ty are cotangents on the dx/dy samples (already zeroed wherever the
    sample is invalid). Boundary samples are constant zero, so only the
    interior columns/rows contribute.
    """
    out = np.zeros_like(tx)
    out[:, :-1] -= tx[:, :-1]
    out[:, 1:] += tx[:, :-1]
    out[:-1, :] -= ty[:-1, :]
    out[1:, :] += ty[:-1, :]
    return out


def intensity(img: LinearImage) -> LinearImage:
    """Per-pixel channel mean; identity for single-channel images."""
    return LinearImage(img.data.mean(axis=2, keepdims=True), img.mask.copy())


def chromaticity(img: LinearImage, eps: float = 1e-6) -> LinearImage:
    """First two chromaticity coordinates (R, G) / (R+G+B).

    Pixels whose channel sum falls below eps are marked invalid.
    """
    if img.channels != 3:
        raise ValueError("chromaticity requires a 3-channel image")
    s = img.data.sum(axis=2)
    ok = s >= eps
    denom = np.where(ok, s, 1.0)
    chroma = img.data[:, :, :2] / denom[:, :, None]
    return LinearImage(np.where(ok[:, :, None], chroma, 0.0), img.mask & ok)


def check_same_grid(*imgs) -> None:
    dims = {(im.height, im.width) for im in imgs}
    if len(dims) > 1:
        raise ValueError(f"images are on different grids: {sorted(dims)}")
