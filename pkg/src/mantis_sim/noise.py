"""Seeded randomness for mismatch and noise.

Every stochastic quantity in the simulator is drawn through a NoiseContext.
Static draws (device mismatch frozen at fabrication: PRNU gains, DS3 column
offsets, memory-cell SF offsets, MAC unit capacitors, CDAC bit capacitors)
are derived from the seed and a per-quantity label, so they do not depend on
the order in which subsystems first touch the context.  Temporal draws
(kT/C sampling noise, comparator noise) come from a separate sequential
stream.  Two contexts built with the same seed therefore produce
bit-identical simulations; re-running with a different ``temporal_stream``
keeps the same "chip" (same static draws) but fresh readout noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np


@dataclass(frozen=True)
class NoiseFlags:
    """Per-source enables. A disabled source contributes exactly zero."""

    prnu: bool = True
    temporal: bool = True
    ds3_mismatch: bool = True
    ds3_noise: bool = True
    ds_coupling: bool = True
    mem_mismatch: bool = True
    mem_noise: bool = True
    drift: bool = True
    mac_mismatch: bool = True
    mac_noise: bool = True
    tg_leakage: bool = False   # global-corner TG leakage study, off by default
    comparator: bool = True
    cdac_mismatch: bool = True

    @classmethod
    def all_off(cls) -> "NoiseFlags":
        return cls(**{f.name: False for f in fields(cls)})

    @classmethod
    def all_on(cls) -> "NoiseFlags":
        return cls(**{f.name: True for f in fields(cls)})

    def but(self, **kwargs) -> "NoiseFlags":
        return replace(self, **kwargs)


def _seed_key(seed: int, *parts) -> list[int]:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for part in parts:
        if isinstance(part, str):
            key.extend(part.encode("utf-8"))
        else:
            key.append(int(part))
    return key


@dataclass
class NoiseContext:
    seed: int
    flags: NoiseFlags = field(default_factory=NoiseFlags)
    temporal_stream: int = 0

    def __post_init__(self):
        self._static_cache: dict[str, np.ndarray] = {}
        self._temporal = np.random.default_rng(
            np.random.SeedSequence(_seed_key(self.seed, "temporal", self.temporal_stream))
        )

    # -- static (fabrication-time) draws -----------------------------------
    def static_normal(self, name: str, shape, sigma: float) -> np.ndarray:
        """Unit-free mismatch realization, cached per label.

        The returned array is ``sigma * N(0, 1)`` with the unit normals fixed
        by (seed, name) alone: sweeping sigma rescales the same realization,
        which keeps mismatch sweeps monotone.
        """
        unit = self._static_cache.get(name)
        if unit is None:
            rng = np.random.default_rng(np.random.SeedSequence(_seed_key(self.seed, "static", name)))
            unit = rng.standard_normal(shape)
            self._static_cache[name] = unit
        if unit.shape != tuple(shape):
            raise ValueError(f"static draw {name!r} requested with shape {tuple(shape)}, first drawn as {unit.shape}")
        return sigma * unit

    # -- temporal (per-readout) draws ---------------------------------------
    def temporal_normal(self, sigma, shape=None) -> np.ndarray | float:
        if shape is None:
            return float(self._temporal.standard_normal()) * sigma
        return self._temporal.standard_normal(shape) * sigma

    def fresh_temporal(self) -> "NoiseContext":
        """Same chip (static draws re-derivable from the seed), new readout stream."""
        return NoiseContext(self.seed, self.flags, self.temporal_stream + 1)


def ideal_context(seed: int = 0) -> NoiseContext:
    return NoiseContext(seed, NoiseFlags.all_off())


def calibrated_context(seed: int) -> NoiseContext:
    return NoiseContext(seed, NoiseFlags())
