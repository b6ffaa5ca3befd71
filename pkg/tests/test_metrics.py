import numpy as np
import pytest

from clesc import metrics
from clesc.codec import latitude_weight_map
from clesc.errors import DimensionError
from clesc.frames import synthetic_frame


def test_wmse_identical_zero_and_symmetry():
    f = synthetic_frame(32, 64, seed=0)
    g = synthetic_frame(32, 64, seed=1)
    assert metrics.wmse(f, f) == 0.0
    assert metrics.wmse(f, g) == pytest.approx(metrics.wmse(g, f), rel=1e-12)


def test_wmse_constant_offset_cancels_weights():
    a = np.full((48, 32, 3), 100.0)
    assert metrics.wmse(a, a + 5.0) == pytest.approx(25.0, rel=1e-9)
    assert metrics.wmse(a, a + 1.0) == pytest.approx(1.0, rel=1e-9)


def test_wmse_quadratic_scaling():
    rng = np.random.default_rng(2)
    a = rng.uniform(0, 200, (32, 32, 3))
    err = rng.uniform(-5, 5, a.shape)
    one = metrics.wmse(a, a + err)
    three = metrics.wmse(a, a + 3 * err)
    assert three == pytest.approx(9 * one, rel=1e-9)


def test_wmse_polar_error_cheaper_than_equatorial():
    base = np.full((64, 32, 3), 50, np.uint8)
    pole = base.copy()
    pole[0, 5, :] = 250
    equator = base.copy()
    equator[32, 5, :] = 250
    assert metrics.wmse(base, pole) < metrics.wmse(base, equator)
    # ratio equals the weight ratio of the two rows
    w = latitude_weight_map(64, 32)
    ratio = metrics.wmse(base, equator) / metrics.wmse(base, pole)
    assert ratio == pytest.approx(w[32, 0] / w[0, 0], rel=1e-9)


def test_wmse_shape_mismatch():
    with pytest.raises(DimensionError):
        metrics.wmse(np.zeros((32, 32, 3)), np.zeros((32, 48, 3)))


def test_ws_psnr_values():
    a = np.full((32, 32, 3), 100.0)
    assert metrics.ws_psnr(a, a) == 99.0  # sentinel cap
    assert metrics.ws_psnr(a, a + 5.0) == pytest.approx(
        10 * np.log10(255**2 / 25), rel=1e-9
    )
    full_scale = np.zeros((32, 32, 3))
    assert metrics.ws_psnr(full_scale, full_scale + 255.0) == pytest.approx(0.0, abs=1e-9)


def test_ws_psnr_decreasing_in_wmse():
    a = np.full((32, 32, 3), 128.0)
    values = [metrics.ws_psnr(a, a + d) for d in (1.0, 2.0, 4.0, 8.0)]
    assert values == sorted(values, reverse=True)


def test_ws_ssim_identity_bound_symmetry():
    f = synthetic_frame(64, 64, seed=3)
    assert metrics.ws_ssim(f, f) == pytest.approx(1.0, abs=1e-12)
    inv = (255 - f).astype(np.uint8)
    v = metrics.ws_ssim(f, inv)
    assert v < 0.5
    assert v == pytest.approx(metrics.ws_ssim(inv, f), rel=1e-12)
    rng = np.random.default_rng(4)
    noisy = np.clip(f + rng.normal(0, 10, f.shape), 0, 255).astype(np.uint8)
    assert metrics.ws_ssim(f, noisy) <= 1.0


def test_cbr_values():
    assert metrics.cbr([15729], 512, 1024) == pytest.approx(0.01, abs=1e-4)
    assert metrics.cbr([0, 0], 512, 1024) == 0.0
    # constant symbol count is independent of the GoP length
    one = metrics.cbr([4096], 128, 128)
    many = metrics.cbr([4096] * 7, 128, 128)
    assert one == pytest.approx(many, rel=1e-12)
    with pytest.raises(ValueError):
        metrics.cbr([], 128, 128)


def test_quality_report_csv_row():
    report = metrics.QualityReport(
        sweep_value=1.0,
        snr_db=2.0,
        cbr=0.01,
        ws_psnr=30.0,
        ws_ssim=0.9,
        ber_pre_fec=0.1,
        ber_post_fec=0.0,
    )
    row = report.csv_row()
    assert len(row) == len(metrics.QualityReport.CSV_COLUMNS) == 17
    assert row[0] == "1.000000"
