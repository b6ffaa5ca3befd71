import numpy as np
import pytest

from clesc import phy
from clesc.bits import random_bits
from clesc.errors import ConfigurationError, DimensionError


def test_path_loss_values():
    assert phy.path_loss_db(2.6, 100.0) == pytest.approx(82.69947, abs=1e-4)
    assert phy.path_loss_db(2.6, 1.0) == pytest.approx(40.69947, abs=1e-4)
    # one distance decade adds exactly 21 dB
    assert phy.path_loss_db(2.6, 1000.0) - phy.path_loss_db(2.6, 100.0) == pytest.approx(21.0)


def test_path_loss_domain_errors():
    with pytest.raises(ConfigurationError):
        phy.path_loss_db(2.6, 0.5)
    with pytest.raises(ConfigurationError):
        phy.path_loss_db(0.0, 100.0)


def test_bpsk_mapping():
    out = phy.modulate(np.array([0, 1], np.uint8))
    assert np.allclose(out, [1.0, -1.0])
    bits = random_bits(np.random.default_rng(0), 999)
    syms = phy.modulate(bits)
    assert np.allclose(np.abs(syms) ** 2, 1.0)


def test_qpsk_mapping():
    assert phy.modulate(np.array([0, 0], np.uint8), "qpsk")[0] == pytest.approx(
        (1 + 1j) / np.sqrt(2)
    )
    # gray map: adjacent symbols differ in one bit
    corners = {
        (0, 0): (1 + 1j), (0, 1): (1 - 1j), (1, 0): (-1 + 1j), (1, 1): (-1 - 1j)
    }
    for bits, point in corners.items():
        sym = phy.modulate(np.array(bits, np.uint8), "qpsk")[0]
        assert sym == pytest.approx(point / np.sqrt(2))
    odd = phy.modulate(np.ones(3, np.uint8), "qpsk")  # pads with 0
    assert odd.size == 2


def test_map_demap_round_trip():
    rng = np.random.default_rng(1)
    for n in [1, 5, 17, 256, 2049]:
        syms = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        grid = phy.map_subcarriers(syms, 16)
        assert np.allclose(phy.demap_subcarriers(grid), syms)


def test_round_robin_assignment():
    grid = phy.map_subcarriers(np.arange(5, dtype=complex), 2)
    assert np.allclose(grid.symbols[0].real, [0, 2, 4])
    assert np.allclose(grid.symbols[1].real, [1, 3, 0])  # last slot zero-padded


def test_default_config_matches_experiment_settings():
    cfg = phy.ChannelConfig()
    assert cfg.subcarriers == 256
    assert cfg.tx_power_mw == pytest.approx(10 ** (-53 / 10) * 200e6)
    # 30.01 dBm transmit, -59.99 dBm full-band noise
    assert 10 * np.log10(cfg.tx_power_mw) == pytest.approx(30.0103, abs=1e-3)
    assert 10 * np.log10(cfg.noise_power_mw) == pytest.approx(-59.9897, abs=1e-3)


def test_small_scale_fading_moments():
    cfg = phy.ChannelConfig(subcarriers=512, distance_m=1.0)
    rng = np.random.default_rng(2)
    draws = [phy.realize_channel(cfg, rng).gains for _ in range(200)]
    g2 = np.abs(np.concatenate(draws)) ** 2
    pl_lin = 10 ** (-cfg.path_loss_db / 10)
    assert g2.size >= 1e5
    assert g2.mean() / pl_lin == pytest.approx(1.0, abs=0.02)


def test_seeded_determinism():
    cfg = phy.ChannelConfig()
    a = phy.realize_channel(cfg, np.random.default_rng(42)).gains
    b = phy.realize_channel(cfg, np.random.default_rng(42)).gains
    assert np.array_equal(a, b)


def test_identity_channel():
    k = 8
    state = phy.ChannelState(
        gains=np.ones(k, complex), tx_power_mw=float(k), noise_power_mw=0.0
    )
    syms = phy.modulate(random_bits(np.random.default_rng(3), 24))
    grid = phy.map_subcarriers(syms, k)
    out = phy.apply_channel(grid, state, np.random.default_rng(0))
    assert np.allclose(out.symbols, grid.symbols)


def test_noise_variance_moment():
    k = 64
    n0_total = 2.0 * k  # 2.0 per subcarrier
    state = phy.ChannelState(
        gains=np.zeros(k, complex), tx_power_mw=0.0, noise_power_mw=n0_total
    )
    grid = phy.map_subcarriers(np.zeros(k * 2000, complex), k)
    out = phy.apply_channel(grid, state, np.random.default_rng(4))
    est = np.mean(np.abs(out.symbols) ** 2)
    assert est == pytest.approx(2.0, rel=0.03)


def test_output_power_decomposition():
    k = 64
    rng = np.random.default_rng(5)
    gains = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
    state = phy.ChannelState(gains=gains, tx_power_mw=4.0 * k, noise_power_mw=0.5 * k)
    syms = phy.modulate(random_bits(rng, k * 4000))
    out = phy.apply_channel(phy.map_subcarriers(syms, k), state, rng)
    power = np.mean(np.abs(out.symbols) ** 2, axis=1)
    expected = 4.0 * np.abs(gains) ** 2 + 0.5
    assert np.allclose(power, expected, rtol=0.1)


def test_snr_single_term_and_relabeling():
    state = phy.ChannelState(
        gains=np.ones(1, complex), tx_power_mw=10.0, noise_power_mw=1.0
    )
    assert phy.snr_db(state) == pytest.approx(10.0)

    rng = np.random.default_rng(6)
    gains = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    s1 = phy.ChannelState(gains=gains, tx_power_mw=3.0, noise_power_mw=0.7)
    s2 = phy.ChannelState(gains=gains[::-1], tx_power_mw=3.0, noise_power_mw=0.7)
    assert phy.snr_db(s1) == pytest.approx(phy.snr_db(s2))


def test_snr_monte_carlo_matches_link_budget():
    cfg = phy.ChannelConfig()  # f_c 2.6 GHz, B 200 MHz, d 100 m
    rng = np.random.default_rng(7)
    values = [phy.snr_db(phy.realize_channel(cfg, rng)) for _ in range(3000)]
    analytic = (
        10 * np.log10(cfg.tx_power_mw / cfg.noise_power_mw) - cfg.path_loss_db
    )
    assert analytic == pytest.approx(7.301, abs=0.01)
    assert np.mean(values) == pytest.approx(analytic, abs=0.5)


def test_equalize_noiseless_signs_exact():
    cfg = phy.ChannelConfig(noiseless=True, subcarriers=32)
    rng = np.random.default_rng(8)
    bits = random_bits(rng, 320)
    grid = phy.map_subcarriers(phy.modulate(bits), 32)
    state = phy.realize_channel(cfg, rng)
    out = phy.apply_channel(grid, state, rng)
    llr = phy.equalize_demod(out, state)
    assert llr.size == bits.size
    assert np.array_equal((llr < 0).astype(np.uint8), bits)
    assert np.all(np.abs(llr) == phy.LLR_SATURATION)


def test_equalize_qpsk_noiseless_signs_exact():
    cfg = phy.ChannelConfig(noiseless=True, subcarriers=16, modulation="qpsk")
    rng = np.random.default_rng(12)
    bits = random_bits(rng, 256)
    grid = phy.map_subcarriers(phy.modulate(bits, "qpsk"), 16)
    state = phy.realize_channel(cfg, rng)
    out = phy.apply_channel(grid, state, rng)
    llr = phy.equalize_demod(out, state, "qpsk")
    assert llr.size == bits.size
    assert np.array_equal((llr < 0).astype(np.uint8), bits)


def test_llr_magnitude_grows_with_gain():
    k = 4
    gains = np.array([0.1, 0.5, 1.0, 2.0], complex)
    state = phy.ChannelState(gains=gains, tx_power_mw=float(k), noise_power_mw=0.4 * k)
    grid = phy.map_subcarriers(np.ones(4, complex), k)
    faded = phy.SymbolGrid(gains[:, None] * grid.symbols, 4)  # no noise
    llr = phy.equalize_demod(faded, state)
    assert np.all(np.diff(np.abs(llr)) > 0)


def test_vanishing_gain_is_erasure():
    gains = np.array([1e-12, 1.0], complex)
    state = phy.ChannelState(gains=gains, tx_power_mw=2.0, noise_power_mw=0.2)
    grid = phy.map_subcarriers(np.ones(2, complex), 2)
    llr = phy.equalize_demod(grid, state)
    assert llr[0] == 0.0 and llr[1] != 0.0


def test_subcarrier_count_mismatch():
    state = phy.ChannelState(
        gains=np.ones(4, complex), tx_power_mw=4.0, noise_power_mw=1.0
    )
    grid = phy.map_subcarriers(np.ones(8, complex), 8)
    with pytest.raises(DimensionError):
        phy.apply_channel(grid, state, np.random.default_rng(0))


def test_uncoded_rayleigh_ber_closed_form():
    snr_lin = 10.0
    k, blocks = 256, 800
    rng = np.random.default_rng(9)
    errs = total = 0
    for _ in range(blocks):
        small = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
        state = phy.ChannelState(
            gains=small, tx_power_mw=float(k), noise_power_mw=k / snr_lin
        )
        bits = random_bits(rng, k)
        out = phy.apply_channel(phy.map_subcarriers(phy.modulate(bits), k), state, rng)
        hard = (phy.equalize_demod(out, state) < 0).astype(np.uint8)
        errs += int((hard != bits).sum())
        total += k
    expected = phy.rayleigh_bpsk_ber(snr_lin)
    assert errs / total == pytest.approx(expected, rel=0.10)
