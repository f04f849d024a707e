"""Filter bank storage: up to 32 4b 16x16 filters with per-filter 8b offsets.

On-disk format (ASCII, diffable, hand-authorable):

    MANTISFB v1
    filters=N
    offset=<int8>            # repeated per filter
    <16 lines of 16 space-separated integers in [-7, 7]>
    ...
    FCHEAD                   # optional fully-connected head section
    <N integers in [-128, 127] on one line>
    bias=<int>
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import FILTER_SIZE, MAX_FILTERS
from .mac import WEIGHT_MAX, WEIGHT_MIN
from .sar_adc import OFFSET_MAX, OFFSET_MIN

MAGIC = "MANTISFB v1"


class FilterFormatError(ValueError):
    pass


@dataclass
class FilterBank:
    weights: np.ndarray                 # (n_filt, 16, 16) int
    offsets: np.ndarray                 # (n_filt,) int, signed 8b
    fc_weights: np.ndarray | None = None   # (n_filt,) int, signed 8b
    fc_bias: int | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int64)
        self.offsets = np.asarray(self.offsets, dtype=np.int64)
        n = self.weights.shape[0]
        if self.weights.shape != (n, FILTER_SIZE, FILTER_SIZE):
            raise FilterFormatError(f"weights must be (n, 16, 16), got {self.weights.shape}")
        if not 1 <= n <= MAX_FILTERS:
            raise FilterFormatError(f"bank must hold 1..{MAX_FILTERS} filters, got {n}")
        if self.offsets.shape != (n,):
            raise FilterFormatError("one offset per filter required")
        if self.weights.min() < WEIGHT_MIN or self.weights.max() > WEIGHT_MAX:
            raise FilterFormatError(f"weights outside [{WEIGHT_MIN}, {WEIGHT_MAX}]")
        if self.offsets.min() < OFFSET_MIN or self.offsets.max() > OFFSET_MAX:
            raise FilterFormatError(f"offsets outside [{OFFSET_MIN}, {OFFSET_MAX}]")
        if self.fc_weights is not None:
            self.fc_weights = np.asarray(self.fc_weights, dtype=np.int64)
            if self.fc_weights.shape != (n,):
                raise FilterFormatError("FC head needs one weight per filter")
            if self.fc_weights.min() < OFFSET_MIN or self.fc_weights.max() > OFFSET_MAX:
                raise FilterFormatError("FC weights outside signed 8b range")

    @property
    def n_filt(self) -> int:
        return self.weights.shape[0]


def load_filters(path) -> FilterBank:
    lines = Path(path).read_text().splitlines()
    pos = 0

    def next_line() -> str:
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise FilterFormatError(f"{path}: unexpected end of file at line {pos + 1}")
        pos += 1
        return lines[pos - 1].strip()

    if next_line() != MAGIC:
        raise FilterFormatError(f"{path}:1: bad header, expected {MAGIC!r}")
    decl = next_line()
    if not decl.startswith("filters="):
        raise FilterFormatError(f"{path}:{pos}: expected filters=N")
    n = int(decl.split("=", 1)[1])
    if not 1 <= n <= MAX_FILTERS:
        raise FilterFormatError(f"{path}:{pos}: bank capacity is 1..{MAX_FILTERS} filters, got {n}")

    weights = np.zeros((n, FILTER_SIZE, FILTER_SIZE), dtype=np.int64)
    offsets = np.zeros(n, dtype=np.int64)
    for f in range(n):
        decl = next_line()
        if not decl.startswith("offset="):
            raise FilterFormatError(f"{path}:{pos}: expected offset=<int8> for filter {f}")
        offsets[f] = int(decl.split("=", 1)[1])
        for r in range(FILTER_SIZE):
            row = next_line().split()
            if len(row) != FILTER_SIZE:
                raise FilterFormatError(f"{path}:{pos}: expected {FILTER_SIZE} weights")
            weights[f, r] = [int(x) for x in row]
            if weights[f, r].min() < WEIGHT_MIN or weights[f, r].max() > WEIGHT_MAX:
                raise FilterFormatError(
                    f"{path}:{pos}: weight outside [{WEIGHT_MIN}, {WEIGHT_MAX}]")

    fc_weights = None
    fc_bias = None
    while pos < len(lines) and not lines[pos].strip():
        pos += 1
    if pos < len(lines):
        if next_line() != "FCHEAD":
            raise FilterFormatError(f"{path}:{pos}: trailing content is not an FCHEAD section")
        fc_weights = np.array([int(x) for x in next_line().split()], dtype=np.int64)
        decl = next_line()
        if not decl.startswith("bias="):
            raise FilterFormatError(f"{path}:{pos}: expected bias=<int>")
        fc_bias = int(decl.split("=", 1)[1])

    return FilterBank(weights, offsets, fc_weights, fc_bias)


def save_filters(bank: FilterBank, path) -> None:
    out = [MAGIC, f"filters={bank.n_filt}"]
    for f in range(bank.n_filt):
        out.append(f"offset={int(bank.offsets[f])}")
        for r in range(FILTER_SIZE):
            out.append(" ".join(str(int(x)) for x in bank.weights[f, r]))
    if bank.fc_weights is not None:
        out.append("FCHEAD")
        out.append(" ".join(str(int(x)) for x in bank.fc_weights))
        out.append(f"bias={int(bank.fc_bias or 0)}")
    Path(path).write_text("\n".join(out) + "\n")


def random_bank(n_filt: int, rng: np.random.Generator, zero_sum: bool = False,
                row_balanced: bool = False) -> FilterBank:
    """Uniform random 4b filters with zero offsets.

    ``zero_sum`` balances each filter's total weight to zero.  ``row_balanced``
    additionally balances every 16-weight row, which keeps each row psum
    centered in the SC amplifier's linear range regardless of the input
    pedestal (trained filter sets are regularized the same way in practice).
    """
    w = rng.integers(WEIGHT_MIN, WEIGHT_MAX + 1, size=(n_filt, FILTER_SIZE, FILTER_SIZE))

    def balance(flat: np.ndarray) -> None:
        while flat.sum() != 0:
            i = rng.integers(flat.size)
            step = -np.sign(flat.sum())
            if WEIGHT_MIN <= flat[i] + step <= WEIGHT_MAX:
                flat[i] += step

    if row_balanced:
        for f in range(n_filt):
            for r in range(FILTER_SIZE):
                balance(w[f, r])
    elif zero_sum:
        for f in range(n_filt):
            balance(w[f].ravel())
    return FilterBank(w, np.zeros(n_filt, dtype=np.int64))
