"""DS3 units: delta-reset sampling, voltage downshifting, image downsampling.

One DS3 unit per pixel column samples the signal level on C_SIG and the reset
level on C_RST, then dumps both (opposite polarities) onto the feedback cap,
producing

    v_pix = v_ref + (c_s / c_fb) * (v_rst - v_sig)

which cancels pixel offset FPN and compresses the 2.5 V-domain pixel swing
into the ~[0.6, 1.5] V window of the convolution pipeline.  For downsampling,
the OTAs of ds adjacent columns are shorted so each stored row value is the
average of a ds-wide group, and the hold caps of ds consecutive rows are then
shorted to average vertically: the tile output is the mean of the per-pixel
downshifted values.

Nonidealities: a static per-column offset (local mismatch of caps and OTA),
a kT/C-derived output noise, and, when downsampling, a single additive error
per tile output modeling layout coupling between the shared nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import ARRAY_SIZE, K_BOLTZMANN, ROOM_TEMPERATURE
from .noise import NoiseContext
from .sensor import RawPixelFrame

SUPPORTED_DS = (1, 2, 4)


@dataclass(frozen=True)
class Ds3Params:
    c_s: float = 26e-15             # C_SIG = C_RST sampling caps [F]
    c_fb: float = 58e-15            # feedback cap [F]
    v_ref: float = 0.6              # output reference [V]
    v_cm: float = 1.2               # OTA common mode [V]
    mismatch_sigma: float = 2.2e-3  # per-column static offset [V]
    ds_coupling_sigma: float = 10e-3  # per-tile coupling error, ds > 1 [V]
    temperature: float = ROOM_TEMPERATURE
    force_nominal_ratio: bool = False  # use the rounded 0.45 instead of c_s/c_fb

    def __post_init__(self):
        if not 0 < self.c_s / self.c_fb <= 1:
            raise ValueError("c_s/c_fb must be in (0, 1]")
        if self.v_ref >= self.v_cm:
            raise ValueError("v_ref must be below v_cm")

    @property
    def ratio(self) -> float:
        return 0.45 if self.force_nominal_ratio else self.c_s / self.c_fb


def ds3_output_noise_sigma(p: Ds3Params) -> float:
    """Output-referred thermal noise of one DS3 readout: (c_s/c_fb)*sqrt(2kT/c_s)."""
    return float(p.ratio * np.sqrt(2.0 * K_BOLTZMANN * p.temperature / p.c_s))


def drs_downshift(v_rst, v_sig, p: Ds3Params, ctx: NoiseContext, cols=None):
    """Delta-reset sample and downshift one value (or an array of values).

    ``cols`` selects which column units perform the readout so their static
    mismatch applies; omit it for a position-agnostic (mismatch-free) value.
    """
    v_rst = np.asarray(v_rst, dtype=np.float64)
    v_sig = np.asarray(v_sig, dtype=np.float64)
    if np.any(v_rst < v_sig):
        raise ValueError("v_rst < v_sig: pixel ordering violated")
    out = p.v_ref + p.ratio * (v_rst - v_sig)
    if cols is not None and ctx.flags.ds3_mismatch and p.mismatch_sigma > 0:
        offsets = ctx.static_normal("ds3_col_mismatch", (ARRAY_SIZE,), p.mismatch_sigma)
        out = out + offsets[np.asarray(cols)]
    if ctx.flags.ds3_noise:
        out = out + ctx.temporal_normal(ds3_output_noise_sigma(p), out.shape if out.ndim else None)
    return out if out.ndim else float(out)


def ds3_process_block(raw: RawPixelFrame, row_start: int, ds: int, p: Ds3Params,
                      ctx: NoiseContext) -> np.ndarray:
    """Read ds consecutive pixel rows and return one downsampled row.

    Output has 128/ds entries; entry j is the mean of the downshifted values
    of the ds x ds tile at columns [j*ds, (j+1)*ds).
    """
    if ds not in SUPPORTED_DS:
        raise ValueError(f"ds must be one of {SUPPORTED_DS}")
    if row_start % ds != 0:
        raise ValueError(f"row block {row_start} not aligned to ds={ds}")
    if not 0 <= row_start <= ARRAY_SIZE - ds:
        raise ValueError("row block out of range")

    rows = slice(row_start, row_start + ds)
    cols = np.arange(ARRAY_SIZE)
    values = drs_downshift(raw.v_rst[rows], raw.v_sig[rows], p, ctx,
                           cols=np.broadcast_to(cols, (ds, ARRAY_SIZE)))
    values = np.asarray(values).reshape(ds, ARRAY_SIZE)
    # Horizontal average within each ds-wide column group, then vertical.
    tiled = values.reshape(ds, ARRAY_SIZE // ds, ds)
    out = tiled.mean(axis=2).mean(axis=0)
    if ds > 1 and ctx.flags.ds_coupling and p.ds_coupling_sigma > 0:
        # Coupling error grows with the number of shorted neighbor units;
        # the characterized sigma is the ds=2 (single-neighbor) point.
        out = out + ctx.temporal_normal(p.ds_coupling_sigma * (ds - 1), out.shape)
    return out
