"""Modulation, OFDMA subcarrier mapping, fading channel and soft demod.

Channel model per subcarrier k: y_k = h_k * sqrt(P/K) * s_k + n_k, where
h_k combines unit-variance Rayleigh small-scale fading with the distance
path loss 32.4 + 20 log10(f_c GHz) + 21 log10(d m), and n_k is complex
Gaussian with per-subcarrier power N0_total / K.

Reported SNR follows the full-band form 10 log10(sum_k P|h_k|^2 / (K N0))
with N0 the full-band noise power; LLRs use the per-subcarrier noise.
Block fading: gains stay fixed within one packet transmission and are
redrawn for every (re)transmission.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DimensionError

MODULATIONS = ("bpsk", "qpsk")
LLR_SATURATION = 30.0  # stands in for infinite confidence on a noiseless link
_QPSK_SCALE = 1.0 / np.sqrt(2.0)


def path_loss_db(carrier_ghz: float, distance_m: float) -> float:
    if carrier_ghz <= 0:
        raise ConfigurationError(f"carrier frequency must be positive, got {carrier_ghz}")
    if distance_m < 1.0:
        raise ConfigurationError(
            f"path-loss model needs distance >= 1 m, got {distance_m}"
        )
    return 32.4 + 20.0 * np.log10(carrier_ghz) + 21.0 * np.log10(distance_m)


def _dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class ChannelConfig:
    subcarriers: int = 256
    carrier_ghz: float = 2.6
    bandwidth_hz: float = 200e6
    tx_psd_dbm_hz: float = -53.0
    noise_psd_dbm_hz: float = -143.0
    distance_m: float = 100.0
    modulation: str = "bpsk"
    target_snr_db: float | None = None  # back-solve noise from realized gains
    noiseless: bool = False

    def __post_init__(self):
        if self.subcarriers < 1:
            raise ConfigurationError("need at least one subcarrier")
        if self.bandwidth_hz <= 0:
            raise ConfigurationError("bandwidth must be positive")
        if self.modulation not in MODULATIONS:
            raise ConfigurationError(f"unknown modulation {self.modulation!r}")
        path_loss_db(self.carrier_ghz, self.distance_m)  # validates both

    @property
    def path_loss_db(self) -> float:
        return path_loss_db(self.carrier_ghz, self.distance_m)

    @property
    def tx_power_mw(self) -> float:
        return _dbm_to_mw(self.tx_psd_dbm_hz) * self.bandwidth_hz

    @property
    def noise_power_mw(self) -> float:
        return _dbm_to_mw(self.noise_psd_dbm_hz) * self.bandwidth_hz

    def with_sweep_value(self, sweep_type: str, value: float) -> "ChannelConfig":
        if sweep_type == "snr_db":
            return replace(self, target_snr_db=float(value))
        if sweep_type == "distance_m":
            return replace(self, distance_m=float(value), target_snr_db=None)
        raise ConfigurationError(f"unknown sweep type {sweep_type!r}")


@dataclass
class ChannelState:
    gains: np.ndarray  # K complex gains, small-scale x large-scale
    tx_power_mw: float
    noise_power_mw: float  # full-band noise power N0_total

    @property
    def subcarriers(self) -> int:
        return self.gains.size

    @property
    def noise_per_subcarrier_mw(self) -> float:
        return self.noise_power_mw / self.subcarriers

    @property
    def power_per_subcarrier_mw(self) -> float:
        return self.tx_power_mw / self.subcarriers


@dataclass
class SymbolGrid:
    symbols: np.ndarray  # (K, slots) complex
    n_symbols: int  # occupied count before zero padding

    @property
    def subcarriers(self) -> int:
        return self.symbols.shape[0]


def modulate(bits: np.ndarray, scheme: str = "bpsk") -> np.ndarray:
    """Unit-energy constellation symbols; QPSK pads an odd tail bit with 0."""
    bits = np.asarray(bits, dtype=np.uint8)
    if scheme == "bpsk":
        return (1.0 - 2.0 * bits).astype(np.complex128)
    if scheme == "qpsk":
        if bits.size % 2:
            bits = np.concatenate([bits, np.zeros(1, np.uint8)])
        pairs = bits.reshape(-1, 2)
        re = 1.0 - 2.0 * pairs[:, 0]
        im = 1.0 - 2.0 * pairs[:, 1]
        return (re + 1j * im) * _QPSK_SCALE
    raise ConfigurationError(f"unknown modulation {scheme!r}")


def map_subcarriers(symbols: np.ndarray, subcarriers: int) -> SymbolGrid:
    """Round-robin: symbol i goes to subcarrier i mod K."""
    if subcarriers < 1:
        raise ConfigurationError("need at least one subcarrier")
    symbols = np.asarray(symbols, dtype=np.complex128)
    n = symbols.size
    slots = max(1, -(-n // subcarriers))
    padded = np.zeros(subcarriers * slots, dtype=np.complex128)
    padded[:n] = symbols
    return SymbolGrid(padded.reshape(slots, subcarriers).T, n)


def demap_subcarriers(grid: SymbolGrid) -> np.ndarray:
    return grid.symbols.T.reshape(-1)[: grid.n_symbols]


def realize_channel(cfg: ChannelConfig, rng: np.random.Generator) -> ChannelState:
    """Fresh small-scale fading draw for one packet transmission."""
    k = cfg.subcarriers
    small = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
    gains = small * 10.0 ** (-cfg.path_loss_db / 20.0)
    power = cfg.tx_power_mw
    if cfg.noiseless:
        noise = 0.0
    elif cfg.target_snr_db is not None:
        snr_lin = 10.0 ** (cfg.target_snr_db / 10.0)
        noise = float(np.sum(power * np.abs(gains) ** 2) / (k * snr_lin))
    else:
        noise = cfg.noise_power_mw
    return ChannelState(gains=gains, tx_power_mw=power, noise_power_mw=noise)


def apply_channel(
    grid: SymbolGrid, state: ChannelState, rng: np.random.Generator
) -> SymbolGrid:
    if grid.subcarriers != state.subcarriers:
        raise DimensionError(
            f"grid has {grid.subcarriers} subcarriers, state has {state.subcarriers}"
        )
    amp = np.sqrt(state.power_per_subcarrier_mw)
    faded = state.gains[:, None] * amp * grid.symbols
    n0 = state.noise_per_subcarrier_mw
    if n0 > 0.0:
        noise = np.sqrt(n0 / 2.0) * (
            rng.standard_normal(faded.shape) + 1j * rng.standard_normal(faded.shape)
        )
        faded = faded + noise
    return SymbolGrid(faded, grid.n_symbols)


def snr_db(state: ChannelState) -> float:
    """Full-band SNR: 10 log10(sum_k P |h_k|^2 / (K N0_total))."""
    if state.noise_power_mw <= 0.0:
        return float("inf")
    k = state.subcarriers
    ratio = np.sum(state.tx_power_mw * np.abs(state.gains) ** 2) / (
        k * state.noise_power_mw
    )
    return float(10.0 * np.log10(ratio))


def equalize_demod(
    received: SymbolGrid, state: ChannelState, scheme: str = "bpsk"
) -> np.ndarray:
    """Zero-forcing equalization with perfect CSI, then per-bit LLRs.

    BPSK: llr = 4 Re(s_hat) (P/K) |h|^2 / (2 N0_sub), positive means bit 0.
    QPSK uses the same form per I/Q component with the 1/sqrt(2) amplitude.
    A vanishing gain |h| < 1e-9 yields llr 0 (erasure); a noiseless link
    yields saturated +/-30 confidence.
    """
    if scheme not in MODULATIONS:
        raise ConfigurationError(f"unknown modulation {scheme!r}")
    amp = np.sqrt(state.power_per_subcarrier_mw)
    h = state.gains[:, None]
    alive = np.abs(h) >= 1e-9
    s_hat = np.where(alive, received.symbols / np.where(alive, h * amp, 1.0), 0.0)

    n0 = state.noise_per_subcarrier_mw
    gain_sq = (amp * np.abs(h)) ** 2
    if scheme == "bpsk":
        comps = [np.real(s_hat)]
    else:
        comps = [np.real(s_hat) * _QPSK_SCALE, np.imag(s_hat) * _QPSK_SCALE]
    llr_planes = []
    for comp in comps:
        if n0 > 0.0:
            plane = 4.0 * comp * gain_sq / (2.0 * n0)
        else:
            plane = np.sign(comp) * LLR_SATURATION
        llr_planes.append(np.where(alive, plane, 0.0))

    # undo the round-robin mapping, interleaving I/Q bits for QPSK
    per_symbol = np.stack(llr_planes, axis=-1)  # (K, slots, bits/sym)
    flat = per_symbol.transpose(1, 0, 2).reshape(-1)
    return flat[: received.n_symbols * len(comps)]


def rayleigh_bpsk_ber(mean_snr_lin: float) -> float:
    """Closed-form uncoded BPSK bit error rate over Rayleigh fading."""
    return 0.5 * (1.0 - np.sqrt(mean_snr_lin / (1.0 + mean_snr_lin)))
