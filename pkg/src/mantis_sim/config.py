"""Textual run configuration: key=value lines, strict keys, reproducible echo.

Every parameter of the simulation is reachable through a namespaced key
(``pixel.c_pd=12.2e-15``, ``mac.cap_mismatch_sigma=0.01``, ...).  Unknown
keys and out-of-range values are rejected with the offending line number.
Each run writes a fully resolved echo of its configuration; re-parsing the
echo reproduces the identical configuration, and its hash is stamped into
every numeric artifact.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .analog_memory import MemoryParams
from .ds3 import Ds3Params
from .mac import MacParams
from .noise import NoiseFlags
from .params import PROFILE_NAMES, SimParams
from .pipeline import ConvConfig
from .sar_adc import AdcParams
from .sensor import PixelParams


class ConfigError(ValueError):
    pass


_MODES = ("imaging", "fe", "roi", "perf")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "fe"
    ds: int = 1
    stride: int = 2
    n_filt: int = 1
    fmap_bits: int = 8
    t_exp: float = 12.5e-3
    schedule: str = "parallel"
    profile: str = "ideal"
    seed: int = 0
    trials: int = 1
    scene: str = ""
    filters: str = ""
    scene_lux_max: float = 0.0      # 0 means auto (full swing at t_exp)
    roi_threshold: int = 0
    sim: SimParams = field(default_factory=SimParams)
    flag_overrides: dict = field(default_factory=dict)

    def conv_config(self, mode: str = "feature_extraction") -> ConvConfig:
        return ConvConfig(mode=mode, ds=self.ds, stride=self.stride, n_filt=self.n_filt,
                          fmap_bits=self.fmap_bits, t_exp=self.t_exp, schedule=self.schedule)

    def noise_flags(self) -> NoiseFlags:
        base = NoiseFlags.all_off() if self.profile == "ideal" else NoiseFlags()
        return base.but(**self.flag_overrides) if self.flag_overrides else base


_PARAM_SECTIONS = {
    "pixel": PixelParams,
    "ds3": Ds3Params,
    "mem": MemoryParams,
    "mac": MacParams,
    "adc": AdcParams,
}
_SECTION_ATTR = {"pixel": "pixel", "ds3": "ds3", "mem": "memory", "mac": "mac", "adc": "adc"}

_TOP_KEYS = {
    "mode": str, "ds": int, "stride": int, "n_filt": int, "fmap_bits": int,
    "t_exp": float, "schedule": str, "profile": str, "seed": int, "trials": int,
    "scene": str, "filters": str, "scene_lux_max": float, "roi_threshold": int,
}

_CHOICES = {
    "mode": _MODES,
    "ds": (1, 2, 4),
    "stride": (2, 4, 8, 16),
    "fmap_bits": (1, 2, 4, 8),
    "schedule": ("sequential", "parallel"),
    "profile": PROFILE_NAMES,
}


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "on", "yes"):
        return True
    if text.lower() in ("0", "false", "off", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(value: str, target_type):
    if target_type is bool:
        return _parse_bool(value)
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    return value


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    top: dict = {}
    section_values: dict[str, dict] = {name: {} for name in _PARAM_SECTIONS}
    flag_overrides: dict = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))

        try:
            if "." in key:
                section, param = key.split(".", 1)
                if section == "noise":
                    valid = {f.name for f in fields(NoiseFlags)}
                    if param not in valid:
                        raise ConfigError(f"{source}:{lineno}: unknown noise flag {param!r}")
                    flag_overrides[param] = _parse_bool(value)
                    continue
                if section not in _PARAM_SECTIONS:
                    raise ConfigError(f"{source}:{lineno}: unknown section {section!r}")
                cls = _PARAM_SECTIONS[section]
                fld = {f.name: f for f in fields(cls)}.get(param)
                if fld is None:
                    raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
                section_values[section][param] = _coerce(value, fld.type if isinstance(fld.type, type) else type(fld.default))
                continue
            if key not in _TOP_KEYS:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            parsed = _coerce(value, _TOP_KEYS[key])
            if key in _CHOICES and parsed not in _CHOICES[key]:
                raise ConfigError(f"{source}:{lineno}: {key}={parsed!r} not in allowed set {_CHOICES[key]}")
            top[key] = parsed
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc

    sim_kwargs = {}
    for section, values in section_values.items():
        if values:
            base = getattr(SimParams(), _SECTION_ATTR[section])
            try:
                sim_kwargs[_SECTION_ATTR[section]] = replace(base, **values)
            except ValueError as exc:
                raise ConfigError(f"{source}: invalid {section} parameters: {exc}") from exc
    sim = replace(SimParams(), **sim_kwargs) if sim_kwargs else SimParams()

    try:
        return RunConfig(sim=sim, flag_overrides=flag_overrides, **top)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), source=str(path))


def resolved_text(cfg: RunConfig) -> str:
    """Canonical echo: every key, defaults included, floats via repr."""
    lines = []
    for key in sorted(_TOP_KEYS):
        value = getattr(cfg, key)
        lines.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    for section in sorted(_PARAM_SECTIONS):
        params = getattr(cfg.sim, _SECTION_ATTR[section])
        for f in dataclasses.fields(params):
            value = getattr(params, f.name)
            lines.append(f"{section}.{f.name}={value!r}" if isinstance(value, float)
                         else f"{section}.{f.name}={value}")
    for name in sorted(cfg.flag_overrides):
        lines.append(f"noise.{name}={'true' if cfg.flag_overrides[name] else 'false'}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(resolved_text(cfg).encode()).hexdigest()[:12]
