"""3T APS pixel array model.

The pixel integrates photocurrent on its internal node during exposure and is
read out twice per frame (signal level, then reset level) so that downstream
delta-reset sampling can cancel the per-pixel offset component of FPN.  The
model is column-referred and behavioral:

* discharge:  v_sig = clamp(v_rst - (I_ph + i_dark) * t_exp / c_pd, 0, v_rst)
* PRNU:       multiplicative gain spread on the photocurrent (static draw)
* TN:         additive Gaussian voltage on the signal readout (temporal draw)

The absolute reset level and the lux-to-photocurrent conversion are not
physical measurements but calibration constants: the defaults map the usable
120-1500 lx range at a 20 ms exposure onto the full output-code range of the
imaging pipeline (1500 lx discharges the pixel swing completely).

Conventions for the two noise amplitudes, both expressed as fractions of the
full scale (FS) and characterized at 50% FS:

* ``prnu_sigma`` is the spatial sigma in %FS measured at half scale, so the
  underlying gain spread is ``2 * prnu_sigma``.
* ``tn_sigma`` is level-independent, applied as ``tn_sigma * v_rst_nom``
  volts on the signal readout.  It is the measured total temporal noise and
  therefore subsumes the much smaller kT/C floor given by
  :func:`pixel_readout_noise_sigma`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import ARRAY_SIZE, K_BOLTZMANN, ROOM_TEMPERATURE
from .noise import NoiseContext


class DimensionError(ValueError):
    """Scene or frame grid does not match the 128x128 pixel array."""


# Full pixel swing (v_rst_nom) reached at 1500 lx and 20 ms exposure, with
# the default dark current accounting for part of the discharge.
DEFAULT_LUX_TO_CURRENT = (2.0 * 12.2e-15 / 20e-3 - 10e-15) / 1500.0  # A/lx


@dataclass(frozen=True)
class PixelParams:
    c_pd: float = 12.2e-15          # pixel node capacitance [F]
    a_sf_pix: float = 0.69          # pixel source-follower gain [V/V]
    v_rst_nom: float = 2.0          # column-referred reset level [V]
    i_dark: float = 10e-15          # dark/leakage current [A]
    lux_to_current: float = DEFAULT_LUX_TO_CURRENT
    prnu_sigma: float = 0.0244      # spatial sigma, fraction of FS at 50% FS
    tn_sigma: float = 0.0075        # temporal sigma, fraction of FS
    temperature: float = ROOM_TEMPERATURE

    def __post_init__(self):
        if self.c_pd <= 0:
            raise ValueError("c_pd must be positive")
        if not 0 < self.a_sf_pix <= 1:
            raise ValueError("a_sf_pix must be in (0, 1]")
        if self.prnu_sigma < 0 or self.tn_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        if self.v_rst_nom <= 0 or self.temperature < 0:
            raise ValueError("v_rst_nom must be positive and temperature non-negative")


@dataclass(frozen=True)
class RawPixelFrame:
    v_rst: np.ndarray   # 128x128 reset levels [V]
    v_sig: np.ndarray   # 128x128 signal levels [V]
    t_exp: float        # exposure time [s]

    def __post_init__(self):
        if self.v_rst.shape != self.v_sig.shape:
            raise DimensionError("v_rst and v_sig grids differ in shape")
        if np.any(self.v_sig < 0) or np.any(self.v_sig > self.v_rst):
            raise ValueError("frame violates 0 <= v_sig <= v_rst")


def full_swing_lux(p: PixelParams, t_exp: float) -> float:
    """Illuminance at which photo plus dark current discharge the full swing
    in exactly t_exp seconds (the brightest representable scene value)."""
    i_photo = p.v_rst_nom * p.c_pd / t_exp - p.i_dark
    return max(i_photo, 0.0) / p.lux_to_current


def scene_from_image(image: np.ndarray, lux_max: float, lux_min: float = 0.0) -> np.ndarray:
    """Map an 8b image linearly onto an illuminance grid [lx]."""
    img = np.asarray(image, dtype=np.float64)
    return lux_min + img / 255.0 * (lux_max - lux_min)


def expose(scene, t_exp: float, p: PixelParams, ctx: NoiseContext) -> RawPixelFrame:
    """Integrate a 128x128 illuminance map [lx] for t_exp seconds.

    PRNU perturbs the photocurrent of each pixel with a static gain drawn
    once per context; temporal noise is added to the signal readout and the
    result re-clamped so the reset/signal ordering invariant always holds.
    """
    scene = np.asarray(scene, dtype=np.float64)
    if scene.shape != (ARRAY_SIZE, ARRAY_SIZE):
        raise DimensionError(f"scene must be {ARRAY_SIZE}x{ARRAY_SIZE}, got {scene.shape}")
    if np.any(scene < 0):
        raise ValueError("illuminance must be non-negative")
    if t_exp <= 0:
        raise ValueError("t_exp must be positive")

    i_ph = p.lux_to_current * scene
    if ctx.flags.prnu and p.prnu_sigma > 0:
        gain = 1.0 + ctx.static_normal("pixel_prnu_gain", (ARRAY_SIZE, ARRAY_SIZE), 2.0 * p.prnu_sigma)
        i_ph = i_ph * gain

    v_rst = np.full((ARRAY_SIZE, ARRAY_SIZE), p.v_rst_nom)
    v_sig = v_rst - (i_ph + p.i_dark) * t_exp / p.c_pd
    if ctx.flags.temporal and p.tn_sigma > 0:
        v_sig = v_sig + ctx.temporal_normal(p.tn_sigma * p.v_rst_nom, v_sig.shape)
    v_sig = np.clip(v_sig, 0.0, v_rst)
    return RawPixelFrame(v_rst=v_rst, v_sig=v_sig, t_exp=t_exp)


def pixel_readout_noise_sigma(p: PixelParams, c_s: float) -> float:
    """Thermal noise at the output of a delta-reset-sampled pixel readout.

    sqrt(2kT) * sqrt(a_sf^2 / c_pd + 1 / c_s); the factor 2 accounts for the
    two uncorrelated samples taken by delta-reset sampling.
    """
    if c_s <= 0:
        raise ValueError("c_s must be positive")
    two_kt = 2.0 * K_BOLTZMANN * p.temperature
    return float(np.sqrt(two_kt) * np.sqrt(p.a_sf_pix**2 / p.c_pd + 1.0 / c_s))
