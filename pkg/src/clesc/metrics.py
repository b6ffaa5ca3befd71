"""Panoramic quality and efficiency metrics: WS-PSNR, WS-SSIM, CBR.

All pixel metrics weight squared error (or the local SSIM map) by the
latitude cosine weights and normalize by the weight total, so equatorial
distortion counts more than polar distortion, matching how the sphere is
actually viewed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .codec import latitude_weight_map
from .errors import DimensionError

PSNR_CAP_DB = 99.0  # sentinel for a zero-error frame

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_DYNAMIC_RANGE = 255.0


def _check_pair(x: np.ndarray, y: np.ndarray, w: np.ndarray | None):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"frame shapes differ: {x.shape} vs {y.shape}")
    if x.ndim == 2:
        x = x[:, :, None]
        y = y[:, :, None]
    if w is None:
        w = latitude_weight_map(x.shape[0], x.shape[1])
    w = np.asarray(w, dtype=np.float64)
    if w.shape != x.shape[:2]:
        raise DimensionError(f"weight map {w.shape} does not match frame {x.shape[:2]}")
    return x, y, w


def wmse(x: np.ndarray, y: np.ndarray, w: np.ndarray | None = None) -> float:
    """Weighted mean squared error over all channels."""
    x, y, w = _check_pair(x, y, w)
    channels = x.shape[2]
    err = (x - y) ** 2
    return float(np.sum(err * w[:, :, None]) / (channels * np.sum(w)))


def ws_psnr(x: np.ndarray, y: np.ndarray, w: np.ndarray | None = None) -> float:
    value = wmse(x, y, w)
    if value <= 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(_DYNAMIC_RANGE**2 / value), PSNR_CAP_DB))


def _gaussian_taps(window: int, sigma: float) -> np.ndarray:
    half = (window - 1) / 2.0
    xs = np.arange(window, dtype=np.float64) - half
    taps = np.exp(-0.5 * (xs / sigma) ** 2)
    return taps / taps.sum()


_TAPS = _gaussian_taps(_SSIM_WINDOW, _SSIM_SIGMA)


def _local_mean(plane: np.ndarray) -> np.ndarray:
    out = correlate1d(plane, _TAPS, axis=0, mode="reflect")
    return correlate1d(out, _TAPS, axis=1, mode="reflect")


def ws_ssim(x: np.ndarray, y: np.ndarray, w: np.ndarray | None = None) -> float:
    """Latitude-weighted mean of the per-pixel local SSIM map.

    11x11 Gaussian window (sigma 1.5), stabilizers (K1 L)^2 and (K2 L)^2
    with L = 255, channels averaged.
    """
    x, y, w = _check_pair(x, y, w)
    c1 = (_SSIM_K1 * _DYNAMIC_RANGE) ** 2
    c2 = (_SSIM_K2 * _DYNAMIC_RANGE) ** 2
    total = 0.0
    channels = x.shape[2]
    wsum = np.sum(w)
    for c in range(channels):
        xa, ya = x[:, :, c], y[:, :, c]
        mu_x = _local_mean(xa)
        mu_y = _local_mean(ya)
        var_x = _local_mean(xa * xa) - mu_x * mu_x
        var_y = _local_mean(ya * ya) - mu_y * mu_y
        cov = _local_mean(xa * ya) - mu_x * mu_y
        ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
            (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
        )
        total += float(np.sum(ssim_map * w) / wsum)
    return total / channels


def cbr(symbols_per_frame, height: int, width: int) -> float:
    """Mean modulated-symbol count divided by the source dimension H*W*3."""
    counts = np.asarray(list(symbols_per_frame), dtype=np.float64)
    if counts.size == 0:
        raise ValueError("need at least one frame's symbol count")
    return float(counts.mean() / (height * width * 3))


@dataclass
class QualityReport:
    """One sweep point's metric row.

    Serialized CSV column order:
    sweep_value, snr_db, cbr, ws_psnr, ws_ssim, ber_pre_fec, ber_post_fec,
    pkt_err_rate_level_1..5, mean_retx_level_1..5
    """

    sweep_value: float
    snr_db: float
    cbr: float
    ws_psnr: float
    ws_ssim: float
    ber_pre_fec: float
    ber_post_fec: float
    pkt_err_rate_by_level: tuple[float, ...] = (0.0,) * 5
    mean_retx_by_level: tuple[float, ...] = (0.0,) * 5

    CSV_COLUMNS = (
        ["sweep_value", "snr_db", "cbr", "ws_psnr", "ws_ssim", "ber_pre_fec", "ber_post_fec"]
        + [f"pkt_err_rate_level_{i}" for i in range(1, 6)]
        + [f"mean_retx_level_{i}" for i in range(1, 6)]
    )

    def csv_row(self) -> list[str]:
        values = [
            self.sweep_value,
            self.snr_db,
            self.cbr,
            self.ws_psnr,
            self.ws_ssim,
            self.ber_pre_fec,
            self.ber_post_fec,
            *self.pkt_err_rate_by_level,
            *self.mean_retx_by_level,
        ]
        return [f"{v:.6f}" for v in values]
