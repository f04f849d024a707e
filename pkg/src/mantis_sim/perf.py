"""Analytical performance model: fmap geometry, throughput, energy, RMSE.

Operation counting follows the input-stationary convention for convolutional
imagers: one MAC is a multiply plus an add (factor 2), and with image
downsampling by ds each filter tap covers ds^2 original pixels, so

    throughput = fps * n_filt * n_f^2 * (2 * F^2 * ds^2)

Energy per 1b operation divides the measured power by the throughput
normalized to 1b operations (b_x * b_w), with analog inputs counted as 1b
and 4b weights.  Power is measured profile data, never predicted; the
shipped profile carries the measured operating points of the silicon for
four filters and a 12.5 ms exposure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import ARRAY_SIZE, FILTER_SIZE

SUPPORTED_STRIDES = (2, 4, 8, 16)
SUPPORTED_DS = (1, 2, 4)


class UnsupportedConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OpCountBasis:
    b_x: int = 1   # input resolution used for 1b normalization
    b_w: int = 4   # weight resolution

    def __post_init__(self):
        if self.b_x < 1 or self.b_w < 1:
            raise ValueError("resolutions must be >= 1")


def fmap_size(ds: int, stride: int) -> int:
    """n_f = (128/ds - F)/stride + 1; exact for every supported pair."""
    if ds not in SUPPORTED_DS or stride not in SUPPORTED_STRIDES:
        raise UnsupportedConfigError(f"unsupported (ds={ds}, stride={stride})")
    span = ARRAY_SIZE // ds - FILTER_SIZE
    assert span % stride == 0
    n_f = span // stride + 1
    if n_f < 1:
        raise UnsupportedConfigError("configuration yields an empty feature map")
    return n_f


def ops_per_frame(ds: int, stride: int, n_filt: int) -> int:
    return n_filt * fmap_size(ds, stride) ** 2 * 2 * FILTER_SIZE**2 * ds**2


def throughput(ds: int, stride: int, fps: float, n_filt: int) -> float:
    """Operations per second (not normalized to 1b)."""
    if fps <= 0:
        raise ValueError("fps must be positive")
    return fps * ops_per_frame(ds, stride, n_filt)


def energy_per_op(power: float, ds: int, stride: int, fps: float, n_filt: int,
                  basis: OpCountBasis = OpCountBasis()) -> float:
    """Joules per 1b operation. 1/energy_per_op is the EE in OPS/W."""
    return power / (throughput(ds, stride, fps, n_filt) * basis.b_x * basis.b_w)


def efficiency_tops_w(power: float, ds: int, stride: int, fps: float, n_filt: int,
                      basis: OpCountBasis = OpCountBasis()) -> float:
    return 1e-12 / energy_per_op(power, ds, stride, fps, n_filt, basis)


def processing_energy(power_soc: float, fps: float, n_filt: int) -> float:
    """Joules per pixel, frame, and filter at the SoC level."""
    if fps <= 0 or n_filt <= 0:
        raise ValueError("fps and n_filt must be positive")
    return power_soc / (fps * ARRAY_SIZE * ARRAY_SIZE * n_filt)


def data_reduction(ds: int, stride: int, n_filt: int, fmap_bits: int) -> float:
    """Fraction of the raw 8b image that leaves the chip as feature maps."""
    bits_out = n_filt * fmap_size(ds, stride) ** 2 * fmap_bits
    return bits_out / (ARRAY_SIZE * ARRAY_SIZE * 8)


def rmse_percent(f_ideal: np.ndarray, f_meas: np.ndarray) -> float:
    """Feature-map error metric on mean/sigma-normalized maps.

    Both maps are normalized to zero mean and unit sigma (population sigma),
    making the metric invariant to positive affine transforms of either map;
    the result is scaled by the measured map's peak magnitude to express the
    error as a percentage of the fmap's dynamic range.
    """
    f_ideal = np.asarray(f_ideal, dtype=np.float64)
    f_meas = np.asarray(f_meas, dtype=np.float64)
    if f_ideal.shape != f_meas.shape:
        raise ValueError("feature maps must have the same shape")
    s_i, s_m = np.std(f_ideal), np.std(f_meas)
    if s_i == 0 or s_m == 0:
        raise ValueError("constant feature map: normalization undefined")
    n_i = (f_ideal - np.mean(f_ideal)) / s_i
    n_m = (f_meas - np.mean(f_meas)) / s_m
    return float(100.0 / (2.0 * np.max(np.abs(n_m))) * np.sqrt(np.mean((n_i - n_m) ** 2)))


# ---------------------------------------------------------------------------
# Measured operating points (four filters, 12.5 ms exposure), one row per
# (ds, stride).  fps and the two power columns are measurements; the derived
# columns are kept alongside for regression against the model.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasuredPoint:
    fps: float
    power_accel: float          # [W]
    power_soc: float            # [W]
    throughput_mops: float
    rmse_pct: float
    ee_accel_tops_w: float
    energy_op_accel_fj: float
    ee_soc_tops_w: float
    energy_op_soc_pj: float
    processing_energy_pj: float


MEASURED_N_FILT = 4
MEASURED_T_EXP = 12.5e-3

MEASURED_TABLE: dict[tuple[int, int], MeasuredPoint] = {
    (1, 2):  MeasuredPoint(18.2, 66.84e-6, 338.5e-6, 121.0, 3.01, 7.24, 138.1, 1.43, 0.70, 284.1),
    (1, 4):  MeasuredPoint(79.7, 76.20e-6, 384.7e-6, 137.3, 3.25, 7.31, 138.7, 1.43, 0.70, 73.6),
    (1, 8):  MeasuredPoint(79.7, 22.36e-6, 297.4e-6, 36.7, 4.00, 6.57, 152.1, 0.49, 2.02, 56.9),
    (1, 16): MeasuredPoint(79.7, 8.40e-6, 268.9e-6, 10.5, 4.69, 4.98, 200.9, 0.16, 6.43, 51.5),
    (2, 2):  MeasuredPoint(79.7, 58.74e-6, 357.0e-6, 408.3, 3.40, 27.80, 36.0, 4.57, 0.22, 68.3),
    (2, 4):  MeasuredPoint(79.7, 17.40e-6, 288.0e-6, 110.4, 3.98, 25.38, 39.4, 1.53, 0.65, 55.1),
    (2, 8):  MeasuredPoint(79.7, 6.60e-6, 264.7e-6, 32.0, 6.30, 19.40, 51.6, 0.48, 2.07, 50.7),
    (2, 16): MeasuredPoint(79.7, 4.03e-6, 256.3e-6, 10.5, 8.68, 10.37, 96.4, 0.16, 6.13, 49.0),
    (4, 2):  MeasuredPoint(79.7, 10.07e-6, 271.9e-6, 211.7, 4.88, 84.09, 11.9, 3.11, 0.32, 52.0),
    (4, 4):  MeasuredPoint(79.7, 4.42e-6, 258.3e-6, 65.3, 11.34, 59.17, 16.9, 1.01, 0.99, 49.4),
    (4, 8):  MeasuredPoint(79.7, 3.29e-6, 253.3e-6, 23.5, 9.19, 28.61, 35.0, 0.37, 2.69, 48.5),
    (4, 16): MeasuredPoint(79.7, 2.70e-6, 250.9e-6, 10.5, 8.45, 15.48, 64.6, 0.17, 6.00, 48.0),
}


# Typical SoC power split for reporting (imaging-mode measurement; the
# digital side dominates, the analog macro takes the rest).
MEASURED_BREAKDOWN_SHARES = {
    "controller": 0.38,
    "cpu": 0.25,
    "dma": 0.13,
    "dcmi": 0.02,
    "vddah_pixels_drs": 0.17,
    "vddal_adcs": 0.05,
}


@dataclass(frozen=True)
class PowerProfile:
    """Measured fps and power per configuration, the inputs of the model."""

    name: str = "measured-4filt"
    n_filt: int = MEASURED_N_FILT
    points: dict[tuple[int, int], tuple[float, float, float]] = field(
        default_factory=lambda: {
            key: (pt.fps, pt.power_accel, pt.power_soc) for key, pt in MEASURED_TABLE.items()
        })
    breakdown_shares: dict[str, float] = field(
        default_factory=lambda: dict(MEASURED_BREAKDOWN_SHARES))

    def fps(self, ds: int, stride: int) -> float:
        return self.points[(ds, stride)][0]

    def power_accel(self, ds: int, stride: int) -> float:
        return self.points[(ds, stride)][1]

    def power_soc(self, ds: int, stride: int) -> float:
        return self.points[(ds, stride)][2]


def metrics_row(profile: PowerProfile, ds: int, stride: int,
                basis: OpCountBasis = OpCountBasis()) -> dict:
    """All derived metrics for one configuration of the shipped profile."""
    fps = profile.fps(ds, stride)
    p_acc = profile.power_accel(ds, stride)
    p_soc = profile.power_soc(ds, stride)
    n = profile.n_filt
    return {
        "ds": ds,
        "stride": stride,
        "n_filt": n,
        "fps": fps,
        "n_f": fmap_size(ds, stride),
        "throughput_mops": throughput(ds, stride, fps, n) / 1e6,
        "power_accel_uw": p_acc * 1e6,
        "ee_accel_tops_w": efficiency_tops_w(p_acc, ds, stride, fps, n, basis),
        "energy_op_accel_fj": energy_per_op(p_acc, ds, stride, fps, n, basis) * 1e15,
        "power_soc_uw": p_soc * 1e6,
        "ee_soc_tops_w": efficiency_tops_w(p_soc, ds, stride, fps, n, basis),
        "energy_op_soc_pj": energy_per_op(p_soc, ds, stride, fps, n, basis) * 1e12,
        "processing_energy_pj": processing_energy(p_soc, fps, n) * 1e12,
    }


def metrics_table(profile: PowerProfile | None = None,
                  basis: OpCountBasis = OpCountBasis()) -> list[dict]:
    profile = profile or PowerProfile()
    return [metrics_row(profile, ds, s, basis) for ds in SUPPORTED_DS for s in SUPPORTED_STRIDES]
