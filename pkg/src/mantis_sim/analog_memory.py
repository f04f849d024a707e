"""16x128 analog memory with source-follower readout.

Each cell is a 32 fF MOS cap written through an access switch (the dummy
compensation makes the write ideal here) and read by a dynamic source
follower whose transfer slope sits around 0.83 V/V because of the body
effect.  Stored charge leaks over time; the model applies a signed linear
drift so the retention behavior can be checked against the half-LSB budget
of the 8b converter (2.35 mV on a 1.2 V scale).

Writes fully overwrite a row.  Reads never mutate state:

    v_buf = a_sf_mem * (v_mem + drift_rate * (now - t_write))
            + static cell offset + kT/C read-noise draw

An optional cubic term (``sf_cubic``, off by default) bends the SF transfer
around mid-range to mimic body-effect curvature; downstream normalization
cancels the affine part of the transfer either way.

Storage patterns: without downsampling the 128 memory columns map one-to-one
to image columns.  With downsampling by ds, the memory holds ds replicas of
the (128/ds)-wide row, replica r shifted left by r * 16/ds downsampled
columns, so that patches at different horizontal phases can be served by
different replicas in the same time slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import K_BOLTZMANN, MEMORY_COLS, MEMORY_ROWS, ROOM_TEMPERATURE
from .noise import NoiseContext

# Post-layout drift magnitudes at 85 degC (voltage change per second).
DRIFT_RATE_TT_85C = 26.1e-3
DRIFT_RATE_FF_85C = 21.8e-3

# Half an LSB of a 1.2 V 8b converter: the retention budget.
RETENTION_LIMIT_V = 2.35e-3


class UninitializedCellError(RuntimeError):
    """A memory cell was read before ever being written."""


@dataclass(frozen=True)
class MemoryParams:
    c_mem: float = 32e-15           # storage cap [F]
    a_sf_mem: float = 0.83          # readout SF slope [V/V]
    drift_rate: float = DRIFT_RATE_TT_85C  # [V/s], signed
    sf_mismatch_sigma: float = 3.5e-3      # static per-cell V_BUF spread [V]
    sf_cubic: float = 0.0           # body-effect curvature [V/V^3] around mid-range
    temperature: float = ROOM_TEMPERATURE

    def __post_init__(self):
        if not 0 < self.a_sf_mem <= 1:
            raise ValueError("a_sf_mem must be in (0, 1]")
        if self.drift_rate < 0:
            raise ValueError("drift_rate must be non-negative")


_SF_MID_RANGE = 1.05  # center of the stored-voltage window [0.6, 1.5]


@dataclass
class AnalogMemoryState:
    cells: np.ndarray = field(default_factory=lambda: np.full((MEMORY_ROWS, MEMORY_COLS), np.nan))
    write_time: np.ndarray = field(default_factory=lambda: np.zeros((MEMORY_ROWS, MEMORY_COLS)))
    written: np.ndarray = field(default_factory=lambda: np.zeros((MEMORY_ROWS, MEMORY_COLS), dtype=bool))


def read_noise_sigma(p: MemoryParams) -> float:
    """Output-referred kT/C noise of one memory read: a_sf * sqrt(kT/c_mem)."""
    return float(p.a_sf_mem * np.sqrt(K_BOLTZMANN * p.temperature / p.c_mem))


def write_row(state: AnalogMemoryState, mem_row: int, values, now: float) -> AnalogMemoryState:
    """Overwrite one memory row; previous content has no influence.

    NaN entries mark replica padding (memory columns with no valid image
    column for the current downsampling factor); they stay unwritten so a
    stray read of them fails loudly.
    """
    if not 0 <= mem_row < MEMORY_ROWS:
        raise IndexError(f"memory row {mem_row} out of range")
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (MEMORY_COLS,):
        raise ValueError(f"expected {MEMORY_COLS} values, got {values.shape}")
    state.cells[mem_row] = values
    state.write_time[mem_row] = now
    state.written[mem_row] = np.isfinite(values)
    return state


def read_cells(state: AnalogMemoryState, rows, cols, p: MemoryParams, now: float,
               ctx: NoiseContext):
    """Vectorized read; rows/cols broadcast like numpy fancy indexing."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    if not np.all(state.written[rows, cols]):
        raise UninitializedCellError("read of never-written analog memory cell")
    v_mem = state.cells[rows, cols]
    if ctx.flags.drift and p.drift_rate > 0:
        v_mem = v_mem + p.drift_rate * (now - state.write_time[rows, cols])
    out = p.a_sf_mem * v_mem
    if p.sf_cubic != 0.0:
        out = out + p.sf_cubic * (v_mem - _SF_MID_RANGE) ** 3
    if ctx.flags.mem_mismatch and p.sf_mismatch_sigma > 0:
        offsets = ctx.static_normal("mem_cell_mismatch", (MEMORY_ROWS, MEMORY_COLS), p.sf_mismatch_sigma)
        out = out + offsets[rows, cols]
    if ctx.flags.mem_noise:
        out = out + ctx.temporal_normal(read_noise_sigma(p), out.shape if out.ndim else None)
    return out


def read_cell(state: AnalogMemoryState, mem_row: int, col: int, p: MemoryParams,
              now: float, ctx: NoiseContext) -> float:
    return float(read_cells(state, mem_row, col, p, now, ctx))


def retention_ok(dt: float, p: MemoryParams) -> bool:
    """True while the accumulated drift stays within half an 8b LSB."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    return p.drift_rate * dt <= RETENTION_LIMIT_V


def storage_pattern(ds: int) -> list[tuple[int, int] | None]:
    """Memory column -> (replica index, image column), or None if unused.

    Replica r of the (128/ds)-wide downsampled row occupies memory columns
    [r*128/ds, (r+1)*128/ds) and is shifted left by r*16/ds image columns.
    The tail cells of shifted replicas have no source column and map to None.
    """
    if ds not in (1, 2, 4):
        raise ValueError(f"unsupported ds {ds}")
    width = MEMORY_COLS // ds
    shift_step = 16 // ds
    pattern: list[tuple[int, int] | None] = []
    for mem_col in range(MEMORY_COLS):
        replica, k = divmod(mem_col, width)
        image_col = k + shift_step * replica
        pattern.append((replica, image_col) if image_col < width else None)
    return pattern


def replicate_row(values: np.ndarray, ds: int) -> np.ndarray:
    """Lay a downsampled row out across the 128 memory columns per the pattern."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (MEMORY_COLS // ds,):
        raise ValueError(f"expected {MEMORY_COLS // ds} values for ds={ds}")
    row = np.full(MEMORY_COLS, np.nan)
    for mem_col, entry in enumerate(storage_pattern(ds)):
        if entry is not None:
            row[mem_col] = values[entry[1]]
    return row
