"""Bundled circuit parameters and the two shipped noise profiles.

``ideal``      all mismatch/noise/drift sources disabled; deterministic gains,
               quantization, and clamping remain.  The pipeline output is an
               affine function of the software reference in this profile.
``calibrated`` every source enabled at the post-layout / measured magnitudes
               carried by the per-module parameter defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .analog_memory import MemoryParams
from .ds3 import Ds3Params
from .mac import MacParams
from .noise import NoiseContext, NoiseFlags
from .sar_adc import AdcParams
from .sensor import PixelParams

PROFILE_NAMES = ("ideal", "calibrated", "custom")


@dataclass(frozen=True)
class SimParams:
    pixel: PixelParams = field(default_factory=PixelParams)
    ds3: Ds3Params = field(default_factory=Ds3Params)
    memory: MemoryParams = field(default_factory=MemoryParams)
    mac: MacParams = field(default_factory=MacParams)
    adc: AdcParams = field(default_factory=AdcParams)

    def with_resolution(self, bits: int) -> "SimParams":
        return replace(self, adc=replace(self.adc, resolution=bits))


def profile_flags(name: str) -> NoiseFlags:
    if name == "ideal":
        return NoiseFlags.all_off()
    if name in ("calibrated", "custom"):
        return NoiseFlags()
    raise ValueError(f"unknown profile {name!r}; expected one of {PROFILE_NAMES}")


def make_context(profile: str, seed: int, flags: NoiseFlags | None = None) -> NoiseContext:
    return NoiseContext(seed, flags if flags is not None else profile_flags(profile))
