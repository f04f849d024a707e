import numpy as np
import pytest

from mantis_sim.constants import ARRAY_SIZE
from mantis_sim.noise import NoiseContext, NoiseFlags, ideal_context
from mantis_sim.params import SimParams
from mantis_sim.pipeline import ConvConfig, run_imaging
from mantis_sim.sensor import (DimensionError, PixelParams, expose, full_swing_lux,
                               pixel_readout_noise_sigma)

UNIFORM = np.full((ARRAY_SIZE, ARRAY_SIZE), 100.0)


def test_zero_illuminance_no_dark_current_keeps_reset_level():
    p = PixelParams(i_dark=0.0)
    frame = expose(np.zeros((ARRAY_SIZE, ARRAY_SIZE)), 20e-3, p, ideal_context())
    assert np.array_equal(frame.v_sig, frame.v_rst)


def test_saturating_illuminance_clamps_to_zero():
    p = PixelParams()
    frame = expose(np.full((ARRAY_SIZE, ARRAY_SIZE), 1e7), 20e-3, p, ideal_context())
    assert np.all(frame.v_sig == 0.0)


def test_scene_shape_rejected():
    with pytest.raises(DimensionError):
        expose(np.zeros((64, 64)), 20e-3, PixelParams(), ideal_context())


def test_monotone_in_illuminance():
    p = PixelParams()
    ctx = ideal_context()
    lo = expose(UNIFORM, 20e-3, p, ctx).v_sig
    hi = expose(UNIFORM * 3, 20e-3, p, ctx).v_sig
    assert np.all(hi <= lo)


def test_determinism_bit_identical():
    p = PixelParams()
    scene = np.linspace(0, 1500, ARRAY_SIZE * ARRAY_SIZE).reshape(ARRAY_SIZE, ARRAY_SIZE)
    a = expose(scene, 20e-3, p, NoiseContext(7)).v_sig
    b = expose(scene, 20e-3, p, NoiseContext(7)).v_sig
    assert np.array_equal(a, b)


def test_prnu_is_static_across_temporal_streams():
    p = PixelParams()
    scene = np.full((ARRAY_SIZE, ARRAY_SIZE), 750.0)
    ctx = NoiseContext(3)
    a = expose(scene, 20e-3, p, ctx).v_sig
    b = expose(scene, 20e-3, p, ctx.fresh_temporal()).v_sig
    # same static PRNU, different temporal draws: difference bounded by TN tails
    assert np.abs(a - b).max() < 10 * p.tn_sigma * p.v_rst_nom
    assert not np.array_equal(a, b)


def test_mid_scale_capture_prnu_and_tn_percent_of_full_scale():
    """At 750 lx / 20 ms the digitized frame sits mid-range; spatial spread
    matches the 2.44% FS PRNU figure and frame-to-frame spread the 0.75% FS TN."""
    sim = SimParams()
    cfg = ConvConfig(mode="imaging", t_exp=20e-3)
    scene = np.full((ARRAY_SIZE, ARRAY_SIZE), 750.0)

    ctx = NoiseContext(11, NoiseFlags.all_off().but(prnu=True))
    img = run_imaging(scene, cfg, sim, ctx, lux_max=1500.0).astype(float)
    assert 110 < img.mean() < 145
    assert np.std(img) / 256.0 == pytest.approx(0.0244, rel=0.10)

    ctx = NoiseContext(11, NoiseFlags.all_off().but(temporal=True))
    stack = np.stack([run_imaging(scene, cfg, sim, ctx, lux_max=1500.0).astype(float)
                      for _ in range(12)])
    tn = np.mean(np.std(stack, axis=0)) / 256.0
    assert tn == pytest.approx(0.0075, rel=0.15)


def test_readout_noise_formula_anchor():
    p = PixelParams(temperature=298.0)
    assert pixel_readout_noise_sigma(p, 29e-15) == pytest.approx(0.78e-3, rel=0.02)


def test_readout_noise_vanishes_at_zero_temperature():
    p = PixelParams(temperature=0.0)
    assert pixel_readout_noise_sigma(p, 29e-15) == 0.0


def test_readout_noise_doubled_pixel_cap():
    # independent evaluation of the closed form with c_pd doubled
    k = 1.380649e-23
    expected = np.sqrt(2 * k * 298.0) * np.sqrt(0.69**2 / 24.4e-15 + 1.0 / 29e-15)
    p = PixelParams(c_pd=24.4e-15, temperature=298.0)
    got = pixel_readout_noise_sigma(p, 29e-15)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got < 0.78e-3


def test_full_swing_lux_matches_default_calibration():
    p = PixelParams()
    assert full_swing_lux(p, 20e-3) == pytest.approx(1500.0, rel=1e-9)
