"""File I/O (PFM, PNG, sidecar masks) and ground-truth generation.

PFM payloads honor the header scale sign (negative = little endian) and
store scanlines bottom-up, per the format convention. Masks travel as
sidecar 8-bit PNGs named `<stem>.mask.png` where 0 marks invalid pixels.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .image import LinearImage, check_same_grid

# Reflectance floor for the shading division I / R.
REFLECTANCE_EPS = 1e-4


# ---------------------------------------------------------------------------
# atomic file output

def atomic_write_bytes(path, payload: bytes) -> None:
    """Write a file atomically (temp file in the same directory + rename)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=".tmp-",
                               suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# PFM

def write_pfm(img: LinearImage, path) -> None:
    """Write a 32-bit float PFM ("PF" for 3 channels, "Pf" for 1),
    little-endian (scale -1.0), rows bottom-to-top."""
    if img.channels not in (1, 3):
        raise ValueError("PFM supports 1- or 3-channel images")
    kind = b"PF" if img.channels == 3 else b"Pf"
    header = kind + b"\n" + f"{img.width} {img.height}".encode() + b"\n-1.0\n"
    data = img.data.astype("<f4")
    if img.channels == 1:
        data = data[:, :, 0]
    payload = data[::-1].tobytes()  # bottom row first
    atomic_write_bytes(path, header + payload)


def _read_token(buf: bytes, pos: int):
    while pos < len(buf) and buf[pos : pos + 1].isspace():
        pos += 1
    start = pos
    while pos < len(buf) and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("malformed PFM header: truncated")
    return buf[start:pos], pos


def read_pfm(path) -> LinearImage:
    """Read a PFM file; returns an all-valid LinearImage."""
    buf = Path(path).read_bytes()
    kind, pos = _read_token(buf, 0)
    if kind not in (b"PF", b"Pf"):
        raise ValueError(f"malformed PFM header: bad magic {kind!r}")
    channels = 3 if kind == b"PF" else 1
    wtok, pos = _read_token(buf, pos)
    htok, pos = _read_token(buf, pos)
    stok, pos = _read_token(buf, pos)
    try:
        width, height, scale = int(wtok), int(htok), float(stok)
    except ValueError as e:
        raise ValueError(f"malformed PFM header: {e}") from e
    if width <= 0 or height <= 0 or scale == 0:
        raise ValueError("malformed PFM header: bad dimensions or scale")
    pos += 1  # single whitespace byte after the scale line
    count = width * height * channels
    raw = buf[pos : pos + count * 4]
    if len(raw) != count * 4:
        raise ValueError("truncated PFM payload")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(raw, dtype=dtype).reshape(height, width, channels)
    data = data[::-1].astype(np.float64)
    if abs(scale) != 1.0:
        data = data * abs(scale)
    return LinearImage(data)


# ---------------------------------------------------------------------------
# PNG (via OpenCV; 8- or 16-bit, gray or RGB)

def mask_sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".mask.png")


def _encode_png(arr: np.ndarray) -> bytes:
    ok, enc = cv2.imencode(".png", arr)
    if not ok:
        raise ValueError("PNG encoding failed")
    return enc.tobytes()


def write_png(img: LinearImage, path, bits: int = 16,
              write_mask: bool = None) -> None:
    """Quantize [0, 1] samples to an 8- or 16-bit PNG.

    A sidecar mask PNG is written when any pixel is invalid (or always /
    never when write_mask is True / False).
    """
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    peak = (1 << bits) - 1
    dtype = np.uint8 if bits == 8 else np.uint16
    q = np.round(np.clip(img.data, 0.0, 1.0) * peak).astype(dtype)
    if img.channels == 1:
        arr = q[:, :, 0]
    elif img.channels == 3:
        arr = q[:, :, ::-1]  # RGB -> BGR for OpenCV
    else:
        raise ValueError("PNG supports 1- or 3-channel images")
    atomic_write_bytes(path, _encode_png(arr))
    if write_mask is None:
        write_mask = not img.mask.all()
    if write_mask:
        write_mask_png(img.mask, mask_sidecar_path(path))


def read_png(path) -> LinearImage:
    """Read an 8/16-bit PNG into [0, 1] floats; picks up a sidecar mask
    named `<stem>.mask.png` when present."""
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ValueError(f"cannot read PNG: {path}")
    peak = 65535.0 if arr.dtype == np.uint16 else 255.0
    data = arr.astype(np.float64) / peak
    if data.ndim == 3:
        if data.shape[2] == 4:
            data = data[:, :, :3]
        data = data[:, :, ::-1]  # BGR -> RGB
    mask = None
    side = mask_sidecar_path(path)
    if side.exists() and Path(path) != side:
        mask = read_mask_png(side)
    return LinearImage(data, mask)


def write_mask_png(mask: np.ndarray, path) -> None:
    atomic_write_bytes(path, _encode_png(np.where(mask, 255, 0).astype(np.uint8)))


def write_label_png(labels: np.ndarray, path) -> None:
    """Write an integer label map (e.g. superpixel ids) as a 16-bit PNG."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 65535:
        raise ValueError("labels must fit in uint16")
    atomic_write_bytes(path, _encode_png(labels.astype(np.uint16)))


def read_mask_png(path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if arr is None:
        raise ValueError(f"cannot read mask PNG: {path}")
    return arr > 0


# ---------------------------------------------------------------------------
# ground truth generation

@dataclass
class GroundTruthTriple:
    """Image, reflectance and shading on one grid with a shared mask;
    I = R * S holds per channel at every valid pixel."""

    image: LinearImage
    reflectance: LinearImage
    shading: LinearImage

    @property
    def mask(self) -> np.ndarray:
        return self.image.mask


def make_ground_truth(image: LinearImage, reflectance: LinearImage,
                      light_mask: np.ndarray = None) -> GroundTruthTriple:
    """Derive shading S = I / R per channel, masking out light sources.

    Pixels where any reflectance channel is <= REFLECTANCE_EPS, pixels under
    light_mask (True = light source), and pixels invalid in either input are
    marked invalid in all three outputs.
    """
    check_same_grid(image, reflectance)
    if image.channels != reflectance.channels:
        raise ValueError("image and reflectance channel counts differ")
    valid = image.mask & reflectance.mask
    valid &= (reflectance.data > REFLECTANCE_EPS).all(axis=2)
    if light_mask is not None:
        light_mask = np.asarray(light_mask, dtype=bool)
        if light_mask.shape != valid.shape:
            raise ValueError("light_mask shape mismatch")
        valid &= ~light_mask
    denom = np.where(reflectance.data > REFLECTANCE_EPS, reflectance.data, 1.0)
    shading = np.where(valid[:, :, None], image.data / denom, 0.0)
    return GroundTruthTriple(
        LinearImage(image.data.copy(), valid.copy()),
        LinearImage(reflectance.data.copy(), valid.copy()),
        LinearImage(shading, valid.copy()),
    )
