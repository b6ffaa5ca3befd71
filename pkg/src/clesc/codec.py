"""Surrogate semantic codec.

Converts a panoramic frame into variable-length codeword groups plus an
entropy map and 5-level importance indications, and reconstructs a frame
from (possibly corrupted) group bits. The feature extractor is a 16x16
orthonormal block DCT with a uniform dead-zone quantizer; the per-block
retained dimension is chosen from a quantization set under a
latitude-adaptive cap, so the rate machinery behaves like the real
variable-length encoder without any trained network.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .bits import zero_bits
from .errors import ConfigurationError, DimensionError
from .frames import BLOCK, validate_frame

#: Default quantization set for retained block dimensions.
DEFAULT_Q_SET = (0, 2, 4, 6, 8, 10, 16, 20, 26, 32, 40, 48, 56, 64, 80, 96)

#: Bits spent per retained coefficient (signed 8-bit index).
BITS_PER_DIM = 8

#: Coefficients available per block: 16x16 per channel, 3 channels.
FULL_DIMS = BLOCK * BLOCK * 3

LEVELS = 5


@dataclass(frozen=True)
class CodecConfig:
    q_set: tuple[int, ...] = DEFAULT_Q_SET
    quant_step: float = 16.0
    mode: str = "intra"  # "intra" or "delta"
    m_h: int = 8
    m_w: int = 8
    latitude_adaptive: bool = True

    def __post_init__(self):
        if not self.q_set:
            raise ConfigurationError("quantization set must be nonempty")
        q = tuple(sorted(set(int(v) for v in self.q_set)))
        if q != tuple(self.q_set):
            raise ConfigurationError("quantization set must be sorted and unique")
        if q[0] < 0 or q[-1] <= 0 or q[-1] > FULL_DIMS:
            raise ConfigurationError(
                f"quantization values must lie in [0, {FULL_DIMS}] with max > 0"
            )
        # the signed 8-bit coefficient index must cover the largest DC term
        if self.quant_step < 16.0:
            raise ConfigurationError("quant_step must be >= 16")
        if self.mode not in ("intra", "delta"):
            raise ConfigurationError(f"unknown codec mode {self.mode!r}")
        if self.m_h < 1 or self.m_w < 1:
            raise ConfigurationError("grouping granularity must be >= 1")


@dataclass
class CodewordGroup:
    """One group's bit payload plus the side info needed to decode it."""

    index: int
    bits: np.ndarray  # uint8 0/1 payload, length = dims.sum() * BITS_PER_DIM
    level: int
    dims: np.ndarray  # 2-D per-block retained dimensions within the tile


@dataclass
class OmegaMap:
    omega: np.ndarray
    eta: np.ndarray


@dataclass
class EncodedFrame:
    groups: list[CodewordGroup]
    entropy_map: np.ndarray
    importance_map: np.ndarray

    def __iter__(self):
        return iter((self.groups, self.entropy_map, self.importance_map))


# ---------------------------------------------------------------------------
# latitude weighting


def latitude_weight_map(height: int, width: int) -> np.ndarray:
    """Per-pixel spherical weights, cos((p - H/2 + 1/2) * pi / H) per row."""
    if height < 2 or width < 1:
        raise DimensionError(f"invalid weight-map dimensions {height}x{width}")
    p = np.arange(height, dtype=np.float64)
    row = np.cos((p - height / 2.0 + 0.5) * np.pi / height)
    return np.repeat(row[:, None], width, axis=1)


def pool_weight_map(weights: np.ndarray, grid_h: int, grid_w: int) -> np.ndarray:
    """Adaptive average pooling of a pixel weight map onto a feature grid."""
    h, w = weights.shape
    if h % grid_h or w % grid_w:
        raise DimensionError(
            f"weight map {h}x{w} does not pool evenly onto {grid_h}x{grid_w}"
        )
    bh, bw = h // grid_h, w // grid_w
    return weights.reshape(grid_h, bh, grid_w, bw).mean(axis=(1, 3))


def adaptive_weight_map(entropy_map: np.ndarray, weights: np.ndarray) -> OmegaMap:
    """Blend pooled latitude weights with the normalized entropy factor.

    eta = e / max(e) (0 when the map is all zero); omega = eta * w + 1 - eta.
    """
    entropy_map = np.asarray(entropy_map, dtype=np.float64)
    gh, gw = entropy_map.shape
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (gh, gw):
        weights = pool_weight_map(weights, gh, gw)

    peak = entropy_map.max(initial=0.0)
    if peak > 0.0:
        eta = np.clip(entropy_map / peak, 0.0, 1.0)
    else:
        eta = np.zeros_like(entropy_map)
    omega = eta * weights + 1.0 - eta
    return OmegaMap(omega=omega, eta=eta)


def dimension_select(entropy_bits: float, omega: float, q_set) -> int:
    """Smallest quantized dimension covering the bit demand, capped by omega.

    The cap is the largest q <= omega * max(q_set); if the demand cannot be
    met under the cap the cap value itself is returned.
    """
    q = np.asarray(q_set, dtype=np.int64)
    if q.size == 0:
        raise ConfigurationError("quantization set must be nonempty")
    cap = omega * float(q[-1])
    cap_idx = int(np.searchsorted(q, cap, side="right")) - 1
    if cap_idx < 0:
        return 0
    need_idx = int(np.searchsorted(q * BITS_PER_DIM, entropy_bits, side="left"))
    if need_idx > cap_idx:
        return int(q[cap_idx])
    return int(q[need_idx])


# ---------------------------------------------------------------------------
# grouping and importance levels


def group(grid: np.ndarray, m_h: int, m_w: int) -> list[np.ndarray]:
    """Split a 2-D grid into m_h * m_w contiguous tiles in row-major order."""
    grid = np.asarray(grid)
    gh, gw = grid.shape[:2]
    if m_h < 1 or m_w < 1 or gh % m_h or gw % m_w:
        raise DimensionError(
            f"grid {gh}x{gw} is not divisible into {m_h}x{m_w} tiles"
        )
    th, tw = gh // m_h, gw // m_w
    return [
        grid[i * th : (i + 1) * th, j * tw : (j + 1) * tw].copy()
        for i in range(m_h)
        for j in range(m_w)
    ]


def ungroup(tiles: list[np.ndarray], m_h: int, m_w: int) -> np.ndarray:
    """Inverse of :func:`group` for tiles listed in row-major order."""
    if len(tiles) != m_h * m_w:
        raise DimensionError(f"expected {m_h * m_w} tiles, got {len(tiles)}")
    rows = [
        np.concatenate(tiles[i * m_w : (i + 1) * m_w], axis=1) for i in range(m_h)
    ]
    return np.concatenate(rows, axis=0)


def importance_levels(group_entropies) -> list[int]:
    """Assign 1..5 levels by quintile of per-group entropy totals.

    Groups with equal totals share the lower of the levels their sorted
    positions would receive.
    """
    totals = np.asarray(
        [float(np.sum(t)) for t in group_entropies], dtype=np.float64
    )
    n = totals.size
    if n == 0:
        raise ValueError("need at least one group")
    order = np.argsort(totals, kind="stable")
    rank_level = np.arange(n) * LEVELS // n + 1
    levels = np.empty(n, dtype=np.int64)
    levels[order] = rank_level
    # ties take the level of their first (lowest-ranked) occurrence
    for value in np.unique(totals):
        mask = totals == value
        levels[mask] = levels[mask].min()
    return [int(v) for v in levels]


# ---------------------------------------------------------------------------
# block transform machinery


def _zigzag_order(n: int) -> np.ndarray:
    """Indices of an n x n grid in zigzag (anti-diagonal) scan order."""
    idx = []
    for s in range(2 * n - 1):
        diag = [(i, s - i) for i in range(max(0, s - n + 1), min(s, n - 1) + 1)]
        if s % 2:
            diag.reverse()
        idx.extend(diag)
    flat = np.array([r * n + c for r, c in idx], dtype=np.int64)
    return flat


# global coefficient order: channels interleaved at each zigzag position,
# so a dimension cut keeps the lowest frequencies of all three channels
_ZZ = _zigzag_order(BLOCK)
_COEFF_CHANNEL = np.tile(np.arange(3), BLOCK * BLOCK)
_COEFF_POS = np.repeat(_ZZ, 3)


def _blockify(plane: np.ndarray) -> np.ndarray:
    """(H, W) -> (gh, gw, BLOCK, BLOCK)."""
    h, w = plane.shape
    gh, gw = h // BLOCK, w // BLOCK
    return plane.reshape(gh, BLOCK, gw, BLOCK).transpose(0, 2, 1, 3)


def _unblockify(blocks: np.ndarray) -> np.ndarray:
    gh, gw = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(gh * BLOCK, gw * BLOCK)


def _forward_coefficients(source: np.ndarray) -> np.ndarray:
    """Frame residual (H, W, 3) -> per-block coefficients (gh, gw, FULL_DIMS)."""
    coeff_planes = []
    for c in range(3):
        blocks = _blockify(source[:, :, c])
        coeff_planes.append(scipy.fft.dctn(blocks, axes=(2, 3), norm="ortho"))
    stacked = np.stack(coeff_planes, axis=-1)  # (gh, gw, B, B, 3)
    gh, gw = stacked.shape[:2]
    flat = stacked.reshape(gh, gw, BLOCK * BLOCK, 3)
    return flat[:, :, _ZZ, :].reshape(gh, gw, FULL_DIMS)


def _inverse_coefficients(coeffs: np.ndarray) -> np.ndarray:
    """Per-block coefficients (gh, gw, FULL_DIMS) -> residual (H, W, 3)."""
    gh, gw = coeffs.shape[:2]
    zz = coeffs.reshape(gh, gw, BLOCK * BLOCK, 3)
    ordered = np.zeros_like(zz)
    ordered[:, :, _ZZ, :] = zz
    out = np.empty((gh * BLOCK, gw * BLOCK, 3), dtype=np.float64)
    for c in range(3):
        blocks = ordered[:, :, :, c].reshape(gh, gw, BLOCK, BLOCK)
        out[:, :, c] = _unblockify(
            scipy.fft.idctn(blocks, axes=(2, 3), norm="ortho")
        )
    return out


def _quantize(coeffs: np.ndarray, step: float) -> np.ndarray:
    """Uniform dead-zone quantizer, indices clipped to the int8 range."""
    idx = np.sign(coeffs) * np.floor(np.abs(coeffs) / step)
    return np.clip(idx, -128, 127).astype(np.int8)


def _dequantize(idx: np.ndarray, step: float) -> np.ndarray:
    return np.sign(idx) * (np.abs(idx.astype(np.float64)) + 0.5) * step


# ---------------------------------------------------------------------------
# frame encode / decode


def encode_frame(
    frame: np.ndarray,
    prev: np.ndarray | None = None,
    cfg: CodecConfig = CodecConfig(),
) -> EncodedFrame:
    """Transform, quantize, rate-select and group one frame.

    In delta mode the previous reconstructed frame is subtracted first;
    a missing prev falls back to intra coding (first frame of a GoP).
    """
    frame = validate_frame(frame)
    h, w = frame.shape[:2]
    gh, gw = h // BLOCK, w // BLOCK
    if gh % cfg.m_h or gw % cfg.m_w:
        raise DimensionError(
            f"feature grid {gh}x{gw} is not divisible into {cfg.m_h}x{cfg.m_w} groups"
        )

    if prev is not None:
        prev = validate_frame(prev)
        if prev.shape != frame.shape:
            raise DimensionError(
                f"reference frame shape {prev.shape} != frame shape {frame.shape}"
            )

    if cfg.mode == "delta" and prev is not None:
        source = frame.astype(np.float64) - prev.astype(np.float64)
    else:
        source = frame.astype(np.float64) - 128.0

    coeffs = _forward_coefficients(source)
    q_idx = _quantize(coeffs, cfg.quant_step)

    # bit demand: 8 bits for every coefficient up to the last nonzero one
    nonzero = q_idx != 0
    n_sig = np.where(
        nonzero.any(axis=2), FULL_DIMS - nonzero[:, :, ::-1].argmax(axis=2), 0
    )
    entropy_map = n_sig.astype(np.float64) * BITS_PER_DIM

    if cfg.latitude_adaptive:
        weights = latitude_weight_map(h, w)
    else:
        weights = np.ones((h, w), dtype=np.float64)
    omega_map = adaptive_weight_map(entropy_map, weights)

    q = np.asarray(cfg.q_set, dtype=np.int64)
    max_q = float(q[-1])
    cap_idx = np.searchsorted(q, omega_map.omega * max_q, side="right") - 1
    need_idx = np.searchsorted(q * BITS_PER_DIM, entropy_map, side="left")
    dims = np.where(
        need_idx <= cap_idx, q[np.minimum(need_idx, q.size - 1)], q[np.maximum(cap_idx, 0)]
    )
    dims[cap_idx < 0] = 0
    assert np.all(dims <= omega_map.omega * max_q + 1e-9)

    index_grid = np.arange(gh * gw).reshape(gh, gw)
    entropy_tiles = group(entropy_map, cfg.m_h, cfg.m_w)
    index_tiles = group(index_grid, cfg.m_h, cfg.m_w)
    dims_tiles = group(dims, cfg.m_h, cfg.m_w)
    levels = importance_levels(entropy_tiles)

    flat_idx = q_idx.reshape(gh * gw, FULL_DIMS)
    flat_dims = dims.reshape(gh * gw)
    groups_out = []
    for gi, (blocks, tile_dims) in enumerate(zip(index_tiles, dims_tiles)):
        order = blocks.ravel()
        chunks = [
            np.unpackbits(flat_idx[b, : flat_dims[b]].view(np.uint8))
            for b in order
            if flat_dims[b]
        ]
        payload = np.concatenate(chunks) if chunks else zero_bits(0)
        groups_out.append(
            CodewordGroup(index=gi, bits=payload, level=levels[gi], dims=tile_dims)
        )

    level_tiles = [np.full_like(t, lv) for t, lv in zip(dims_tiles, levels)]
    importance_map = ungroup(level_tiles, cfg.m_h, cfg.m_w).astype(np.uint8)
    return EncodedFrame(groups_out, entropy_map, importance_map)


def decode_frame(
    groups: list[CodewordGroup],
    prev: np.ndarray | None = None,
    cfg: CodecConfig = CodecConfig(),
) -> np.ndarray:
    """Best-effort inverse of :func:`encode_frame`.

    Corrupted payload bits decode to wrong coefficients for the affected
    block only; short payloads are zero-extended. Never raises on bit
    content.
    """
    if not groups:
        raise ValueError("need at least one group")
    th, tw = groups[0].dims.shape
    gh, gw = th * cfg.m_h, tw * cfg.m_w
    q_idx = np.zeros((gh * gw, FULL_DIMS), dtype=np.int8)

    index_grid = np.arange(gh * gw).reshape(gh, gw)
    index_tiles = group(index_grid, cfg.m_h, cfg.m_w)
    for g in groups:
        order = index_tiles[g.index].ravel()
        dims = g.dims.ravel()
        bits = np.asarray(g.bits, dtype=np.uint8)
        need = int(dims.sum()) * BITS_PER_DIM
        if bits.size < need:
            bits = np.concatenate([bits, zero_bits(need - bits.size)])
        pos = 0
        for b, d in zip(order, dims):
            if d == 0:
                continue
            chunk = bits[pos : pos + d * BITS_PER_DIM]
            pos += d * BITS_PER_DIM
            q_idx[b, :d] = np.packbits(chunk).view(np.int8)

    coeffs = _dequantize(q_idx.reshape(gh, gw, FULL_DIMS), cfg.quant_step)
    residual = _inverse_coefficients(coeffs)
    if cfg.mode == "delta" and prev is not None:
        base = np.asarray(prev, dtype=np.float64)
    else:
        base = 128.0
    return np.clip(np.round(base + residual), 0, 255).astype(np.uint8)
