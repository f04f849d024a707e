"""Full-frame orchestration: imaging, feature extraction, patch scheduling, timing.

Feature extraction runs the complete signal chain:

    expose -> DS3 (DRS + downshift + downsampling) -> analog memory
           -> per-row SC-amplifier psums -> CDAC charge sharing
           -> SAR conversion at the configured fmap resolution

A frame stores each downsampled row once (as a rolling 16-row window) and
strides a 16x16 filter over the stored image.  Eight SC-amplifier/ADC groups
work in parallel on non-overlapping 16-column windows; within one time slot
all active patches share the same column phase modulo 16.  When the image is
downsampled, the memory holds ds shifted replicas of each row, letting ds
phases execute in the same slot, which is where the throughput gain of
downsampled configurations comes from.

The frame-rate model is calibrated, not predicted: per-psum and
per-conversion-bit durations plus a fixed frame overhead are fitted to three
measured operating points (the exposure-limited 79.7 fps ceiling, the
convolution-limited 18.2 fps of the densest configuration, and the 27 fps of
the 16-filter 1b RoI workload).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import analog_memory as mem
from . import perf
from .constants import ARRAY_SIZE, FILTER_SIZE, MAX_FILTERS, MEMORY_ROWS
from .ds3 import ds3_process_block, drs_downshift
from .filters import FilterBank
from .mac import psum_rows
from .noise import NoiseContext
from .params import SimParams
from .sar_adc import charge_share_array, sar_convert_array
from .sensor import RawPixelFrame, expose, full_swing_lux, scene_from_image

Mode = Literal["imaging", "feature_extraction", "roi"]


class RetentionError(RuntimeError):
    """A memory cell was read after its drift budget expired."""


@dataclass(frozen=True)
class ConvConfig:
    mode: Mode = "feature_extraction"
    ds: int = 1
    stride: int = 2
    n_filt: int = 1
    fmap_bits: int = 8
    filter_size: int = FILTER_SIZE
    t_exp: float = 12.5e-3
    schedule: Literal["sequential", "parallel"] = "parallel"

    def __post_init__(self):
        if self.mode not in ("imaging", "feature_extraction", "roi"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.filter_size != FILTER_SIZE:
            raise ValueError("filter size is fixed at 16")
        if not 1 <= self.n_filt <= MAX_FILTERS:
            raise ValueError(f"n_filt must be in [1, {MAX_FILTERS}]")
        if self.fmap_bits not in (1, 2, 4, 8):
            raise ValueError("fmap_bits must be a power of two in [1, 8]")
        if self.t_exp <= 0:
            raise ValueError("t_exp must be positive")
        if self.schedule not in ("sequential", "parallel"):
            raise ValueError("schedule must be sequential or parallel")
        perf.fmap_size(self.ds, self.stride)  # validates ds/stride and n_f >= 1

    @property
    def n_f(self) -> int:
        return perf.fmap_size(self.ds, self.stride)


@dataclass(frozen=True)
class ScheduleEntry:
    slot: int       # time slot within one filter pass
    replica: int    # memory replica serving the patch
    row: int        # patch row index (vertical position / stride)
    col: int        # patch column index (horizontal position / stride)
    mem_col: int    # first of the 16 memory columns read
    adc_group: int  # SC amplifier / ADC instance


def stride_schedule(cfg: ConvConfig) -> list[ScheduleEntry]:
    """Enumerate every patch of one filter pass exactly once.

    Patches are grouped into time slots: one slot per patch row and base
    phase, where the ds replicas serve ds different phases simultaneously.
    """
    n_f = cfg.n_f
    width = ARRAY_SIZE // cfg.ds
    phase_step = 16 // cfg.ds            # shift between consecutive replicas
    col_positions = [i * cfg.stride for i in range(n_f)]
    bases = sorted({(c % 16) % phase_step for c in col_positions})

    entries: list[ScheduleEntry] = []
    for row in range(n_f):
        for b_idx, base in enumerate(bases):
            slot = row * len(bases) + b_idx
            for col_idx, c in enumerate(col_positions):
                phase = c % 16
                if phase % phase_step != base:
                    continue
                replica = phase // phase_step
                mem_col = replica * width + (c - phase_step * replica)
                entries.append(ScheduleEntry(slot=slot, replica=replica, row=row,
                                             col=col_idx, mem_col=mem_col,
                                             adc_group=mem_col // 16))
    return entries


def slots_per_row(cfg: ConvConfig) -> int:
    return max(1, 16 // (cfg.stride * cfg.ds))


# ---------------------------------------------------------------------------
# Frame timing
# ---------------------------------------------------------------------------

# Measured frame-rate anchors (four filters, 12.5 ms exposure, parallel
# execution; RoI point uses sixteen filters with 1b fmaps).
_ANCHOR_T_EXP = 12.5e-3
_ANCHOR_FPS_CEILING = 79.7       # exposure-limited configurations
_ANCHOR_FPS_DENSE = 18.2         # ds=1, stride=2: convolution-limited
_ANCHOR_FPS_ROI = 27.0           # ds=2, stride=2, 16 filters, 1b


def _calibrate() -> tuple[float, float, float]:
    t_overhead = 1.0 / _ANCHOR_FPS_CEILING - _ANCHOR_T_EXP
    slots_dense = 4 * 57 * 8         # n_filt * n_f * slots_per_row at (1, 2)
    slots_roi = 16 * 25 * 4          # at (2, 2)
    t_slot_8b = (1.0 / _ANCHOR_FPS_DENSE - t_overhead) / slots_dense
    t_slot_1b = (1.0 / _ANCHOR_FPS_ROI - t_overhead) / slots_roi
    t_bit = (t_slot_8b - t_slot_1b) / 7.0
    t_psum = (t_slot_1b - t_bit) / 16.0
    return t_psum, t_bit, t_overhead


_T_PSUM, _T_BIT, _T_OVERHEAD = _calibrate()


@dataclass(frozen=True)
class TimingModel:
    t_psum: float = _T_PSUM          # per row psum [s]
    t_bit: float = _T_BIT            # per conversion bit [s]
    t_overhead: float = _T_OVERHEAD  # fixed per-frame controller overhead [s]
    t_row_store: float = 2e-6        # per stored memory row [s]

    def slot_time(self, fmap_bits: int) -> float:
        return 16 * self.t_psum + fmap_bits * self.t_bit

    def conv_time(self, cfg: ConvConfig) -> float:
        return cfg.n_filt * cfg.n_f * slots_per_row(cfg) * self.slot_time(cfg.fmap_bits)


@dataclass(frozen=True)
class FrameTiming:
    fps: float
    t_conv: float
    period: float
    beyond_silicon: bool  # parallel with t_conv > t_exp: controller cannot overlap


def frame_timing(cfg: ConvConfig, tm: TimingModel | None = None) -> FrameTiming:
    """Frame rate under sequential or parallel exposure/convolution."""
    tm = tm or TimingModel()
    t_conv = tm.conv_time(cfg)
    if cfg.schedule == "sequential":
        period = cfg.t_exp + t_conv + tm.t_overhead
        beyond = False
    else:
        period = max(cfg.t_exp, t_conv) + tm.t_overhead
        beyond = t_conv > cfg.t_exp
    return FrameTiming(fps=1.0 / period, t_conv=t_conv, period=period, beyond_silicon=beyond)


# ---------------------------------------------------------------------------
# Reference (software) convolution
# ---------------------------------------------------------------------------

def downsample_mean(image: np.ndarray, ds: int) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    return img.reshape(h // ds, ds, w // ds, ds).mean(axis=(1, 3))


def reference_convolution(image: np.ndarray, bank: FilterBank, cfg: ConvConfig) -> np.ndarray:
    """Exact software baseline: mean-downsample, then strided 16x16 dot products.

    Returns (n_filt, n_f, n_f) real-valued maps in image-code units.
    """
    ds_img = downsample_mean(image, cfg.ds)
    n_f = cfg.n_f
    windows = np.lib.stride_tricks.sliding_window_view(ds_img, (FILTER_SIZE, FILTER_SIZE))
    windows = windows[::cfg.stride, ::cfg.stride][:n_f, :n_f]
    return np.einsum("rcij,fij->frc", windows, bank.weights.astype(np.float64))


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------

@dataclass
class FeatureMapSet:
    codes: np.ndarray               # (n_filt, n_f, n_f) integer codes
    cfg: ConvConfig
    saturation_fraction: float      # fraction of clamped psums
    mean: np.ndarray = field(init=False)
    sigma: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mean = self.codes.mean(axis=(1, 2))
        self.sigma = self.codes.std(axis=(1, 2))


def _as_scene(image_or_scene: np.ndarray, cfg: ConvConfig, sim: SimParams,
              lux_max: float | None) -> np.ndarray:
    arr = np.asarray(image_or_scene)
    if arr.dtype == np.uint8:
        if lux_max is None:
            lux_max = full_swing_lux(sim.pixel, cfg.t_exp)
        return scene_from_image(arr, lux_max)
    return arr.astype(np.float64)


def run_feature_extraction(image_or_scene: np.ndarray, bank: FilterBank, cfg: ConvConfig,
                           sim: SimParams, ctx: NoiseContext,
                           lux_max: float | None = None,
                           frame: RawPixelFrame | None = None) -> FeatureMapSet:
    """Simulate one full feature-extraction frame.

    An 8b uint8 input is treated as an image and mapped onto the usable
    illuminance range for the configured exposure; float input is taken as an
    illuminance map directly.  Offsets from the bank shift each filter's
    conversion threshold (meaningful mostly for 1b RoI fmaps).
    """
    if bank.n_filt != cfg.n_filt:
        raise ValueError(f"bank has {bank.n_filt} filters, config expects {cfg.n_filt}")
    adc = replace(sim.adc, resolution=cfg.fmap_bits)
    if frame is None:
        scene = _as_scene(image_or_scene, cfg, sim, lux_max)
        frame = expose(scene, cfg.t_exp, sim.pixel, ctx)

    n_f = cfg.n_f
    tm = TimingModel()
    schedule = stride_schedule(cfg)
    n_slots_row = slots_per_row(cfg)
    slot_time = tm.slot_time(cfg.fmap_bits)

    # Group schedule entries by patch row; per row, gather columns per slot.
    by_row: list[list[ScheduleEntry]] = [[] for _ in range(n_f)]
    for e in schedule:
        by_row[e.row].append(e)

    state = mem.AnalogMemoryState()
    codes = np.zeros((cfg.n_filt, n_f, n_f), dtype=np.int64)
    weights = bank.weights.astype(np.int64)
    offsets = bank.offsets.astype(np.int64)
    clock = 0.0
    stored_until = -1                     # highest downsampled row stored so far
    saturated_count = 0
    total_psums = 0
    retention_budget = mem.RETENTION_LIMIT_V

    for row in range(n_f):
        # Rolling 16-row window: store any rows this patch row still needs.
        top = row * cfg.stride
        for ds_row in range(stored_until + 1, top + FILTER_SIZE):
            values = ds3_process_block(frame, ds_row * cfg.ds, cfg.ds, sim.ds3, ctx)
            mem.write_row(state, ds_row % MEMORY_ROWS, mem.replicate_row(values, cfg.ds),
                          now=clock)
            clock += tm.t_row_store
        stored_until = top + FILTER_SIZE - 1

        entries = by_row[row]
        n_p = len(entries)
        mem_cols = np.array([e.mem_col for e in entries])
        groups = np.array([e.adc_group for e in entries])
        slots = np.array([e.slot - row * n_slots_row for e in entries])
        out_cols = np.array([e.col for e in entries])

        # Read/convert times: filters execute back to back within a patch row.
        read_time = clock + (np.arange(cfg.n_filt)[:, None] * n_slots_row + slots[None, :]) * slot_time

        mem_rows = (top + np.arange(FILTER_SIZE)) % MEMORY_ROWS          # (16,)
        col_idx = mem_cols[:, None] + np.arange(FILTER_SIZE)[None, :]    # (P, 16)
        row_idx = np.broadcast_to(mem_rows[None, :, None], (n_p, FILTER_SIZE, FILTER_SIZE))
        col_idx = np.broadcast_to(col_idx[:, None, :], (n_p, FILTER_SIZE, FILTER_SIZE))

        age = read_time.max() - state.write_time[mem_rows, 0]
        if ctx.flags.drift and np.any(sim.memory.drift_rate * age > retention_budget):
            raise RetentionError("stored row exceeded its drift budget before readout")

        for f in range(cfg.n_filt):
            now = read_time[f]
            v_buf = mem.read_cells(state, row_idx, col_idx, sim.memory,
                                   now[:, None, None], ctx)                # (P, 16, 16)
            psums, sat = psum_rows(v_buf, np.broadcast_to(weights[f], v_buf.shape),
                                   sim.mac, ctx, groups=groups[:, None])   # (P, 16)
            v_sh = charge_share_array(psums, adc, ctx, adc_index=groups)
            saturated_count += int(sat.sum())
            total_psums += sat.size
            codes[f, row, out_cols] = sar_convert_array(v_sh, int(offsets[f]), adc, ctx,
                                                        adc_index=groups)
        clock += cfg.n_filt * n_slots_row * slot_time

    return FeatureMapSet(codes=codes, cfg=cfg,
                         saturation_fraction=saturated_count / max(total_psums, 1))


# ---------------------------------------------------------------------------
# Imaging
# ---------------------------------------------------------------------------

def ideal_chain_gains(cfg: ConvConfig, sim: SimParams,
                      lux_max: float | None = None) -> tuple[float, float, float]:
    """Closed-form gains of the noise-free chain.

    Returns (a, b, divisor) such that the aggregated conversion input is
    v_sh = mac.v_cm + (a * sum(weights) + b * reference_convolution) / divisor
    for an 8b image input; a is the buffered pedestal seen by every tap and
    b converts image codes to buffered volts.
    """
    px, d3 = sim.pixel, sim.ds3
    if lux_max is None:
        lux_max = full_swing_lux(px, cfg.t_exp)
    code_to_v = px.lux_to_current * (lux_max / 255.0) * cfg.t_exp / px.c_pd
    a = sim.memory.a_sf_mem * (d3.v_ref + d3.ratio * px.i_dark * cfg.t_exp / px.c_pd)
    b = sim.memory.a_sf_mem * d3.ratio * code_to_v
    divisor = sim.mac.columns * sim.mac.units_per_column_fb * 16.0
    return a, b, divisor


def imaging_gain(sim: SimParams) -> float:
    """Conditioning gain mapping the usable downshifted swing onto the ADC scale."""
    return sim.adc.full_scale / (sim.ds3.ratio * sim.pixel.v_rst_nom)


def run_imaging(scene_or_image: np.ndarray, cfg: ConvConfig, sim: SimParams,
                ctx: NoiseContext, lux_max: float | None = None) -> np.ndarray:
    """8b 128x128 capture through the DRS imaging pipeline."""
    adc = replace(sim.adc, resolution=8)
    scene = _as_scene(scene_or_image, cfg, sim, lux_max)
    frame = expose(scene, cfg.t_exp, sim.pixel, ctx)
    cols = np.broadcast_to(np.arange(ARRAY_SIZE), frame.v_rst.shape)
    v_pix = drs_downshift(frame.v_rst, frame.v_sig, sim.ds3, ctx, cols=cols)
    v_adc = (np.asarray(v_pix) - sim.ds3.v_ref) * imaging_gain(sim)
    groups = cols // 16
    codes = sar_convert_array(v_adc, 0, adc, ctx, adc_index=groups)
    return codes.astype(np.uint8)
