import numpy as np
import pytest

from mantis_sim.analog_memory import (DRIFT_RATE_FF_85C, AnalogMemoryState, MemoryParams,
                                      UninitializedCellError, read_cell, read_cells,
                                      read_noise_sigma, replicate_row, retention_ok,
                                      storage_pattern, write_row)
from mantis_sim.constants import MEMORY_COLS, MEMORY_ROWS
from mantis_sim.noise import ideal_context


def _ideal_params(**kw) -> MemoryParams:
    return MemoryParams(a_sf_mem=kw.pop("a_sf_mem", 1.0), drift_rate=kw.pop("drift_rate", 0.0), **kw)


def test_write_read_identity_with_unity_gain():
    state = AnalogMemoryState()
    values = np.linspace(0.0, 1.5, MEMORY_COLS)
    write_row(state, 3, values, now=0.0)
    got = read_cells(state, np.full(MEMORY_COLS, 3), np.arange(MEMORY_COLS),
                     _ideal_params(), now=0.0, ctx=ideal_context())
    assert np.array_equal(got, values)


def test_overwrite_wins():
    state = AnalogMemoryState()
    write_row(state, 0, np.full(MEMORY_COLS, 0.3), now=0.0)
    write_row(state, 0, np.full(MEMORY_COLS, 1.1), now=1.0)
    assert read_cell(state, 0, 5, _ideal_params(), now=1.0, ctx=ideal_context()) == 1.1


def _drift_only_ctx():
    from mantis_sim.noise import NoiseContext, NoiseFlags
    return NoiseContext(0, NoiseFlags.all_off().but(drift=True))


def test_drift_after_100ms_matches_characterized_change():
    state = AnalogMemoryState()
    write_row(state, 0, np.full(MEMORY_COLS, 1.0), now=0.0)
    p = MemoryParams()  # default drift 26.1 mV/s
    got = read_cell(state, 0, 0, p, now=0.1, ctx=_drift_only_ctx())
    assert abs(got / p.a_sf_mem - 1.0) == pytest.approx(2.61e-3, rel=1e-9)


def test_drift_is_linear_in_time():
    state = AnalogMemoryState()
    write_row(state, 2, np.full(MEMORY_COLS, 1.2), now=0.0)
    p = MemoryParams()
    got = read_cell(state, 2, 7, p, now=0.05, ctx=_drift_only_ctx())
    assert got / p.a_sf_mem - 1.2 == pytest.approx(p.drift_rate * 0.05, rel=1e-9)


def test_readout_slope():
    state = AnalogMemoryState()
    write_row(state, 1, np.full(MEMORY_COLS, 1.0), now=0.0)
    got = read_cell(state, 1, 0, MemoryParams(drift_rate=0.0), now=0.0, ctx=ideal_context())
    assert got == pytest.approx(0.83)


def test_read_noise_anchor():
    assert read_noise_sigma(MemoryParams(temperature=298.0)) == pytest.approx(0.30e-3, rel=0.02)


def test_uninitialized_cell_read_fails():
    state = AnalogMemoryState()
    with pytest.raises(UninitializedCellError):
        read_cell(state, 0, 0, MemoryParams(), now=0.0, ctx=ideal_context())


def test_row_out_of_range():
    with pytest.raises(IndexError):
        write_row(AnalogMemoryState(), MEMORY_ROWS, np.zeros(MEMORY_COLS), now=0.0)


def test_repeated_reads_do_not_mutate():
    state = AnalogMemoryState()
    write_row(state, 4, np.full(MEMORY_COLS, 0.8), now=0.0)
    p = _ideal_params()
    a = read_cell(state, 4, 10, p, now=0.0, ctx=ideal_context())
    b = read_cell(state, 4, 10, p, now=0.0, ctx=ideal_context())
    assert a == b == 0.8


def test_retention_boundary_cases():
    ff = MemoryParams(drift_rate=DRIFT_RATE_FF_85C)
    assert retention_ok(90.3e-3, ff)
    assert retention_ok(0.0, MemoryParams())
    assert not retention_ok(200e-3, MemoryParams())


def test_storage_pattern_identity_for_ds1():
    pattern = storage_pattern(1)
    assert all(pattern[k] == (0, k) for k in range(MEMORY_COLS))


def test_storage_pattern_shifts():
    assert storage_pattern(2)[64] == (1, 8)
    assert storage_pattern(4)[96] == (3, 12)


def test_storage_pattern_unsupported_ds():
    with pytest.raises(ValueError):
        storage_pattern(3)


@pytest.mark.parametrize("ds", [1, 2, 4])
def test_storage_pattern_replica_coverage(ds):
    """Each replica maps injectively onto image columns, covering the span
    [shift, width) needed by the patches that replica serves."""
    width = MEMORY_COLS // ds
    pattern = storage_pattern(ds)
    for replica in range(ds):
        cols = [entry[1] for entry in pattern[replica * width:(replica + 1) * width]
                if entry is not None]
        shift = (16 // ds) * replica
        assert cols == list(range(shift, width))


@pytest.mark.parametrize("ds", [1, 2, 4])
def test_replicate_row_matches_pattern(ds):
    values = np.arange(MEMORY_COLS // ds, dtype=float)
    row = replicate_row(values, ds)
    for mem_col, entry in enumerate(storage_pattern(ds)):
        if entry is None:
            assert np.isnan(row[mem_col])
        else:
            assert row[mem_col] == values[entry[1]]


def test_optional_cubic_transfer_term():
    state = AnalogMemoryState()
    write_row(state, 0, np.full(MEMORY_COLS, 1.45), now=0.0)
    linear = MemoryParams(drift_rate=0.0)
    bent = MemoryParams(drift_rate=0.0, sf_cubic=0.05)
    a = read_cell(state, 0, 0, linear, now=0.0, ctx=ideal_context())
    b = read_cell(state, 0, 0, bent, now=0.0, ctx=ideal_context())
    assert b - a == pytest.approx(0.05 * (1.45 - 1.05) ** 3, rel=1e-12)
