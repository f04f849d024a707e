"""Charge-domain MAC: 4b sign-magnitude weights on unit caps, SC-amplifier psum.

A row psum multiplies 16 buffered memory voltages by 4b signed weights and
accumulates them in charge.  Each MAC unit connects |w| unit caps of 7 fF to
the amplifier input; positive-weight inputs are applied during the first
clock phase (non-inverting path) and negative-weight inputs during the
second (inverting path).  Every column also contributes 4 unit caps to the
shared feedback, so the ideal transfer over 16 columns is

    v_mac = v_cm + sum_k(w_k * v_k) / 64

Writing the charge at the amplifier summing node for the two phases and
equating them shows the result is independent of the amplifier offset; the
:func:`psum_row_oracle` solves those two charge equations numerically instead
of using the closed form, so the two paths check each other.

Nonidealities: per-unit-cap mismatch (static), kT/C sampling noise plus a
calibrated amplifier noise floor, an optional TG-leakage error for
global-corner studies, and output clamping to the amplifier's linear range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .constants import K_BOLTZMANN, NUM_ADC_GROUPS, ROOM_TEMPERATURE
from .noise import NoiseContext

WEIGHT_MIN, WEIGHT_MAX = -7, 7
UNITS_MAX = 7


class WeightRangeError(ValueError):
    """Weight outside the sign-magnitude range [-7, 7]."""


@dataclass(frozen=True)
class Weight4b:
    sign: int       # +1 or -1
    magnitude: int  # 0..7

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise WeightRangeError("sign must be +1 or -1")
        if not 0 <= self.magnitude <= UNITS_MAX:
            raise WeightRangeError("magnitude must be in [0, 7]")

    @property
    def value(self) -> int:
        return self.sign * self.magnitude


def encode_weight(w: int) -> Weight4b:
    if not WEIGHT_MIN <= w <= WEIGHT_MAX:
        raise WeightRangeError(f"weight {w} outside [{WEIGHT_MIN}, {WEIGHT_MAX}]")
    return Weight4b(sign=-1 if w < 0 else 1, magnitude=abs(int(w)))


@dataclass(frozen=True)
class MacParams:
    c_u: float = 7e-15              # unit cap [F]
    units_per_column_fb: int = 4    # feedback units contributed per column
    columns: int = 16
    v_cm: float = 0.6               # [V]
    clamp_lo: float = 0.15          # amplifier linear range [V]
    clamp_hi: float = 1.05
    cap_mismatch_sigma: float = 0.006    # relative, per unit cap; ~0.7 mV psum spread
    ktc_noise: bool = True
    amp_noise_sigma: float = 0.73e-3     # calibrated intrinsic noise beyond kT/C [V]
    tg_leakage_sigma: float = 0.0        # optional global-corner error [V]; 7.46e-3 typ
    temperature: float = ROOM_TEMPERATURE

    def __post_init__(self):
        if self.c_fb_total <= 0:
            raise ValueError("feedback capacitance must be positive")

    @property
    def c_fb_total(self) -> float:
        return self.columns * self.units_per_column_fb * self.c_u


def _weight_values(weights) -> np.ndarray:
    arr = np.asarray([w.value if isinstance(w, Weight4b) else int(w) for w in np.ravel(weights)])
    if np.any(arr < WEIGHT_MIN) or np.any(arr > WEIGHT_MAX):
        raise WeightRangeError("weights outside [-7, 7]")
    return arr.reshape(np.shape(weights))


def _unit_cap_cumsum(ctx: NoiseContext, p: MacParams) -> tuple[np.ndarray, np.ndarray]:
    """Static cap realizations per SC amplifier instance.

    Returns ``cum`` of shape (groups, columns, 8) with cum[..., m] the summed
    relative size of the first m input unit caps, and per-group feedback
    totals in unit-cap multiples.
    """
    eps_in = ctx.static_normal("mac_unit_caps", (NUM_ADC_GROUPS, p.columns, UNITS_MAX),
                               p.cap_mismatch_sigma)
    eps_fb = ctx.static_normal("mac_fb_caps", (NUM_ADC_GROUPS, p.columns, p.units_per_column_fb),
                               p.cap_mismatch_sigma)
    cum = np.zeros((NUM_ADC_GROUPS, p.columns, UNITS_MAX + 1))
    cum[..., 1:] = np.cumsum(1.0 + eps_in, axis=-1)
    fb_units = (1.0 + eps_fb).sum(axis=(-1, -2))
    return cum, fb_units


def mac_noise_sigma(p: MacParams, weights) -> float:
    """Per-sample noise: kT/C of the connected caps plus the amplifier floor."""
    w = _weight_values(weights)
    c_active = float(np.abs(w).sum()) * p.c_u
    ktc = np.sqrt(2.0 * K_BOLTZMANN * p.temperature * c_active) / p.c_fb_total if p.ktc_noise else 0.0
    return float(np.hypot(ktc, p.amp_noise_sigma))


def psum_rows(v_buf: np.ndarray, weights: np.ndarray, p: MacParams, ctx: NoiseContext,
              groups=0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized psum over leading batch dimensions.

    v_buf: (..., 16) input voltages; weights: (..., 16) integer weights
    (broadcastable against v_buf); groups: SC-amplifier instance index per
    batch element, selecting which static cap realization applies.
    Returns (values, saturated) with values clamped to the linear range.
    """
    v = np.asarray(v_buf, dtype=np.float64)
    w = _weight_values(weights)
    w = np.broadcast_to(w, v.shape)
    g = np.broadcast_to(np.asarray(groups), v.shape[:-1])

    if ctx.flags.mac_mismatch and p.cap_mismatch_sigma > 0:
        cum, fb_units = _unit_cap_cumsum(ctx, p)
        col = np.broadcast_to(np.arange(p.columns), v.shape)
        signed_units = np.sign(w) * cum[g[..., None], col, np.abs(w)]
        c_fb = fb_units[g] * p.c_u
    else:
        signed_units = w.astype(np.float64)
        c_fb = p.c_fb_total
    raw = p.v_cm + p.c_u * (signed_units * v).sum(axis=-1) / c_fb

    if ctx.flags.mac_noise:
        c_active = np.abs(w).sum(axis=-1) * p.c_u
        ktc = np.sqrt(2.0 * K_BOLTZMANN * p.temperature * c_active) / p.c_fb_total if p.ktc_noise else 0.0
        sigma = np.hypot(ktc, p.amp_noise_sigma)
        raw = raw + ctx.temporal_normal(1.0, raw.shape) * sigma
    if ctx.flags.tg_leakage and p.tg_leakage_sigma > 0:
        raw = raw + ctx.temporal_normal(p.tg_leakage_sigma, raw.shape)

    saturated = (raw < p.clamp_lo) | (raw > p.clamp_hi)
    return np.clip(raw, p.clamp_lo, p.clamp_hi), saturated


def psum_row(v_buf, weights, p: MacParams, ctx: NoiseContext, group: int = 0) -> tuple[float, bool]:
    """One 16-element row psum; returns (v_mac, saturated)."""
    v = np.asarray(v_buf, dtype=np.float64)
    if v.shape != (p.columns,):
        raise ValueError(f"expected {p.columns} input voltages")
    values, saturated = psum_rows(v[None, :], np.asarray(_weight_values(weights))[None, :], p, ctx,
                                  groups=np.asarray([group]))
    return float(values[0]), bool(saturated[0])


def psum_row_oracle(v_buf, weights, p: MacParams, amp_offset: float = 0.0) -> float:
    """Numerically solve the two-phase charge balance for v_mac.

    The summing-node charge is written for each phase exactly as the circuit
    dictates and the root of q2 - q1 = 0 is found in v_mac; the injected
    amplifier offset shifts the summing-node level in both phases and must
    cancel.  No mismatch, noise, or clamping: this is the independent check
    of the closed form used by :func:`psum_row`.
    """
    v = np.asarray(v_buf, dtype=np.float64)
    w = _weight_values(weights)
    if v.shape != w.shape:
        raise ValueError("v_buf and weights must align")

    pos = [(abs(wk) * p.c_u, vk) for wk, vk in zip(w, v) if wk > 0]
    neg = [(abs(wk) * p.c_u, vk) for wk, vk in zip(w, v) if wk < 0]
    c_fb = p.c_fb_total
    v_a = p.v_cm + amp_offset  # summing-node level in both phases

    def q_phase1(v_a_):
        q = -sum(c * (vb - v_a_) for c, vb in pos)
        q -= sum(c * (-v_a_) for c, _ in neg)
        return q + c_fb * (v_a_ - p.v_cm)

    def q_phase2(v_a_, v_mac):
        q = -sum(c * (vb - v_a_) for c, vb in neg)
        q -= sum(c * (-v_a_) for c, _ in pos)
        return q + c_fb * (v_a_ - v_mac)

    target = q_phase1(v_a)
    # q_phase2 is affine in v_mac with slope -c_fb; bracket generously.
    return float(brentq(lambda vm: q_phase2(v_a, vm) - target, -20.0, 20.0,
                        xtol=1e-15, rtol=8.9e-16))
