"""SAR ADC: psum aggregation by charge sharing and programmable digitization.

Each converter spans one group of 16 memory columns.  Its capacitive DAC
first serves as the accumulator for the 16 row psums of a patch: the psums
are sampled on equal CDAC segments and shorted together, so the aggregate is
their (capacitance-weighted) mean.  The same CDAC then runs a successive
approximation search over ``resolution`` bits of the 1.2 V full scale.

The silicon splits the CDAC twice (split-MSB and split-array) to save power
and area; neither structure changes the ideal transfer, so the default model
is a single binary-weighted ladder whose bit capacitors are sums of
mismatched unit caps.  An optional split-array mode (``split_array``, 8b
only) solves the two-node bridge network with an attenuation cap instead,
for studying that structure's distinct mismatch signature on DNL/INL.

Per-filter thresholds for the RoI mode are realized as offsets: a signed 8b
code shifting the comparison level by code * full_scale / 256 regardless of
the output resolution.  Comparator decisions tie-break upward (an input
exactly on a threshold yields the higher code).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import NUM_ADC_GROUPS
from .noise import NoiseContext

SUPPORTED_RESOLUTIONS = (1, 2, 4, 8)
OFFSET_MIN, OFFSET_MAX = -128, 127
_MAX_BITS = 8
# Static draw layout per converter: unit-normal per bit capacitor (by
# significance within an 8b frame), then terminator, then bridge cap.
_N_CAP_DRAWS = _MAX_BITS + 2


class IncompleteAccumulationError(ValueError):
    """Charge sharing requires exactly one psum per CDAC segment."""


@dataclass(frozen=True)
class AdcParams:
    full_scale: float = 1.2
    resolution: int = 8
    comparator_offset_sigma: float = 1.62e-3 / 3.0  # +-3 sigma = 1.62 mV
    cdac_mismatch_sigma: float = 0.0                # relative, per unit cap
    v_cm: float = 0.6
    split_array: bool = False                       # bridge-cap structural mode

    def __post_init__(self):
        if self.resolution not in SUPPORTED_RESOLUTIONS:
            raise ValueError(f"resolution must be one of {SUPPORTED_RESOLUTIONS}")
        if self.full_scale <= 0:
            raise ValueError("full_scale must be positive")
        if self.split_array and self.resolution != 8:
            raise ValueError("split-array mode is modeled for 8b resolution only")

    @property
    def lsb(self) -> float:
        return self.full_scale / (1 << self.resolution)

    @property
    def offset_lsb(self) -> float:
        """Offset registers are 8b regardless of the output resolution."""
        return self.full_scale / 256.0


@dataclass(frozen=True)
class OffsetRegister:
    code: int = 0  # positive raises the effective fmap value before comparison

    def __post_init__(self):
        if not OFFSET_MIN <= self.code <= OFFSET_MAX:
            raise ValueError(f"offset code {self.code} outside [{OFFSET_MIN}, {OFFSET_MAX}]")


def _offset_code(offset) -> int:
    return offset.code if isinstance(offset, OffsetRegister) else int(OffsetRegister(int(offset)).code)


def _cap_draws(p: AdcParams, ctx: NoiseContext | None, adc_index: int) -> np.ndarray | None:
    if ctx is None or not ctx.flags.cdac_mismatch or p.cdac_mismatch_sigma <= 0:
        return None
    return ctx.static_normal("cdac_bit_caps", (NUM_ADC_GROUPS, _N_CAP_DRAWS), 1.0)[adc_index]


def bit_weights(p: AdcParams, ctx: NoiseContext | None = None, adc_index: int = 0) -> np.ndarray:
    """Effective binary-ladder bit weights [V], MSB first.

    Bit of significance s is built from 2**s unit caps, so its mismatch
    scales with sqrt(2**s).  Draws are indexed by significance within an 8b
    frame, which keeps the MSB capacitor shared across output resolutions.
    """
    r = p.resolution
    significance = np.arange(r - 1, -1, -1)          # MSB first
    units = 2.0 ** significance
    caps = units.copy()
    term = 1.0
    z = _cap_draws(p, ctx, adc_index)
    if z is not None:
        pos = significance + (_MAX_BITS - r)
        caps = units + p.cdac_mismatch_sigma * np.sqrt(units) * z[pos]
        term = 1.0 + p.cdac_mismatch_sigma * z[_MAX_BITS]
    return p.full_scale * caps / (caps.sum() + term)


def _split_array_levels(p: AdcParams, ctx: NoiseContext | None, adc_index: int) -> np.ndarray:
    """DAC levels of the bridged structure, solved from the two-node network.

    The low nibble drives a sub-array coupled to the comparator node through
    an attenuation cap of 16/15 units; the high nibble drives the main node
    directly.  With nominal capacitors this reproduces the binary ladder.
    """
    units = 2.0 ** np.arange(4)                       # LSB-first within a nibble
    sub, main = units.copy(), units.copy()
    term, bridge = 1.0, 16.0 / 15.0
    z = _cap_draws(p, ctx, adc_index)
    if z is not None:
        sigma = p.cdac_mismatch_sigma
        sub = units + sigma * np.sqrt(units) * z[0:4]
        main = units + sigma * np.sqrt(units) * z[4:8]
        term = 1.0 + sigma * z[_MAX_BITS]
        bridge = 16.0 / 15.0 + sigma * np.sqrt(16.0 / 15.0) * z[_MAX_BITS + 1]

    codes = np.arange(256)
    bits = (codes[:, None] >> np.arange(8)[None, :]) & 1
    drive_sub = bits[:, 0:4] @ sub * p.full_scale
    drive_main = bits[:, 4:8] @ main * p.full_scale
    # Node equations: (sum(main)+C_A) v_a - C_A v_b = drive_main
    #                 -C_A v_a + (sum(sub)+term+C_A) v_b = drive_sub
    a11 = main.sum() + bridge
    a22 = sub.sum() + term + bridge
    det = a11 * a22 - bridge**2
    return (a22 * drive_main + bridge * drive_sub) / det


def dac_levels(p: AdcParams, ctx: NoiseContext | None = None, adc_index: int = 0) -> np.ndarray:
    """Comparator threshold per code word (the DAC transfer)."""
    if p.split_array:
        return _split_array_levels(p, ctx, adc_index)
    codes = np.arange(1 << p.resolution)
    bits = (codes[:, None] >> np.arange(p.resolution - 1, -1, -1)[None, :]) & 1
    return bits @ bit_weights(p, ctx, adc_index)


def charge_share(psums, p: AdcParams | None = None, ctx: NoiseContext | None = None,
                 adc_index: int = 0) -> float:
    """Aggregate the 16 row psums stored on the CDAC segments."""
    psums = np.asarray(psums, dtype=np.float64)
    if psums.shape != (16,):
        raise IncompleteAccumulationError(f"expected exactly 16 psums, got {psums.shape}")
    weights = _segment_weights(p, ctx, adc_index)
    return float(psums @ weights / weights.sum())


def _segment_weights(p, ctx, adc_index) -> np.ndarray:
    if (p is not None and ctx is not None and ctx.flags.cdac_mismatch
            and p.cdac_mismatch_sigma > 0):
        z = ctx.static_normal("cdac_share_caps", (NUM_ADC_GROUPS, 16), 1.0)[adc_index]
        return 1.0 + p.cdac_mismatch_sigma * z
    return np.ones(16)


def charge_share_array(psums: np.ndarray, p: AdcParams | None = None,
                       ctx: NoiseContext | None = None, adc_index=0) -> np.ndarray:
    """Batched charge sharing; psums has shape (..., 16)."""
    psums = np.asarray(psums, dtype=np.float64)
    if psums.shape[-1] != 16:
        raise IncompleteAccumulationError("expected 16 psums per aggregation")
    weights = np.stack([_segment_weights(p, ctx, g) for g in range(NUM_ADC_GROUPS)])
    w = weights[np.asarray(adc_index)]
    return (psums * w).sum(axis=-1) / w.sum(axis=-1)


def sar_convert_array(v, offset, p: AdcParams, ctx: NoiseContext | None = None,
                      adc_index=0) -> np.ndarray:
    """Vectorized successive approximation; out-of-range inputs rail to end codes."""
    v = np.asarray(v, dtype=np.float64)
    codes_offset = (np.vectorize(_offset_code)(offset) if np.ndim(offset) else _offset_code(offset))
    v_eff = v + np.asarray(codes_offset) * p.offset_lsb
    if ctx is not None and ctx.flags.comparator and p.comparator_offset_sigma > 0:
        v_eff = v_eff + ctx.temporal_normal(p.comparator_offset_sigma, v.shape if v.ndim else None)

    adc_index = np.broadcast_to(np.asarray(adc_index), v.shape)
    levels = np.stack([dac_levels(p, ctx, g) for g in range(NUM_ADC_GROUPS)])
    lvl = levels[adc_index]                          # (..., 2**resolution)

    code = np.zeros(v_eff.shape, dtype=np.int64)
    for i in range(p.resolution):
        trial = code + (1 << (p.resolution - 1 - i))
        threshold = np.take_along_axis(lvl, trial[..., None], axis=-1)[..., 0]
        code = np.where(v_eff >= threshold, trial, code)
    return code


def sar_convert(v: float, offset, p: AdcParams, ctx: NoiseContext | None = None,
                adc_index: int = 0) -> int:
    return int(sar_convert_array(np.asarray(float(v)), offset, p, ctx, adc_index))


def transition_levels(p: AdcParams, ctx: NoiseContext | None = None,
                      adc_index: int = 0) -> np.ndarray:
    """Input level at which each output code is first reached.

    For a SAR search over a monotone DAC the lower edge of code c is the DAC
    level of c itself, which covers every code edge exactly.
    """
    return dac_levels(p, ctx, adc_index)


def ideal_transfer_check(p: AdcParams, ctx: NoiseContext | None = None,
                         adc_index: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """DNL and INL in LSB, from the exhaustive set of code transition levels."""
    t = transition_levels(p, ctx, adc_index)
    dnl = np.diff(t[1:]) / p.lsb - 1.0
    inl = (t[1:] - np.arange(1, len(t)) * p.lsb) / p.lsb
    return dnl, inl
