"""Frame validation, PPM/raw I/O and the synthetic test-frame generator.

A frame is an H x W x 3 uint8 array in equirectangular projection. Both
dimensions must be multiples of the 16-pixel feature block.
"""
from __future__ import annotations

import numpy as np
import scipy.ndimage

from .errors import DimensionError

BLOCK = 16


def validate_frame(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise DimensionError(f"frame must be HxWx3, got shape {frame.shape}")
    h, w = frame.shape[:2]
    if h < BLOCK or w < BLOCK:
        raise DimensionError(f"frame must be at least {BLOCK}x{BLOCK}, got {h}x{w}")
    if h % BLOCK or w % BLOCK:
        raise DimensionError(
            f"frame dimensions must be multiples of {BLOCK}, got {h}x{w}"
        )
    if frame.dtype != np.uint8:
        if frame.min() < 0 or frame.max() > 255:
            raise DimensionError("frame samples must lie in [0, 255]")
        frame = frame.astype(np.uint8)
    return frame


def read_ppm(path) -> np.ndarray:
    """Read a binary (P6) PPM file with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()

    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        # skip whitespace and '#' comment lines between header fields
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval

    if fields[0] != b"P6":
        raise ValueError(f"not a binary PPM file: magic {fields[0]!r}")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"only maxval 255 is supported, got {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=height * width * 3, offset=pos)
    return validate_frame(pixels.reshape(height, width, 3))


def write_ppm(path, frame: np.ndarray) -> None:
    frame = validate_frame(frame)
    h, w = frame.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def read_raw(path, height: int, width: int) -> np.ndarray:
    """Read planar RGB (all R samples, then G, then B), 8 bits per sample."""
    planes = np.fromfile(path, dtype=np.uint8, count=3 * height * width)
    if planes.size != 3 * height * width:
        raise ValueError(
            f"raw file holds {planes.size} samples, expected {3 * height * width}"
        )
    return validate_frame(planes.reshape(3, height, width).transpose(1, 2, 0))


def synthetic_frame(
    height: int, width: int, seed: int = 0, frame_index: int = 0
) -> np.ndarray:
    """Latitude-banded test frame: smooth poles, textured equator band.

    Consecutive frame_index values shift the texture slightly so delta
    mode has a small residual to code.
    """
    if height % BLOCK or width % BLOCK:
        raise DimensionError("synthetic frame dimensions must be multiples of 16")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xF0A)))

    rows = np.arange(height, dtype=np.float64)
    base = 60.0 + 130.0 * np.sin(np.pi * rows / height)  # bright equator
    frame = np.repeat(base[:, None], width, axis=1)

    # smooth texture confined to the equator band: low-frequency noise and
    # stripes, strong enough to dominate the entropy map yet compressible
    band = np.abs(rows - (height - 1) / 2.0) < height / 6.0
    coarse = rng.normal(0.0, 55.0, size=(height // 8 + 2, width // 8 + 2))
    texture = scipy.ndimage.zoom(coarse, 8, order=1)[:height, :width]
    cols = np.arange(width, dtype=np.float64)
    stripes = 35.0 * np.sin(
        (cols[None, :] + 3.0 * frame_index) * 2.0 * np.pi / 48.0
    ) * np.sin(rows[:, None] * 2.0 * np.pi / 40.0)
    frame = frame + band[:, None] * (texture + stripes)

    # gentle per-channel tint plus a drifting blob for inter-frame motion
    out = np.empty((height, width, 3), dtype=np.float64)
    tints = (1.0, 0.92, 0.85)
    for c, tint in enumerate(tints):
        out[:, :, c] = frame * tint
    cy = height // 2
    cx = (width // 4 + 5 * frame_index) % width
    yy, xx = np.ogrid[:height, :width]
    dist2 = (yy - cy) ** 2 + np.minimum((xx - cx) % width, (cx - xx) % width) ** 2
    blob = 70.0 * np.exp(-dist2 / (2.0 * (height / 10.0) ** 2))
    out += blob[:, :, None]

    return np.clip(np.round(out), 0, 255).astype(np.uint8)
