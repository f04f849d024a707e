"""Region-of-interest detection head.

The on-chip stage produces sixteen 1b fmaps (per-filter thresholds realized
as ADC offsets).  An off-chip fully-connected combination with signed 8b
weights turns them into an integer heatmap and, against a threshold, a 1b
detection map marking image patches worth transmitting.  Nearly all of the
workload stays on chip: for the 16-filter ds=2/stride=2 operating point the
convolution layer performs ~20.5M operations per frame against ~21k in this
head.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .filters import FilterBank
from .noise import NoiseContext
from .params import SimParams
from .pipeline import ConvConfig, FeatureMapSet, run_feature_extraction


@dataclass(frozen=True)
class RoiHead:
    fc_weights: np.ndarray   # one signed 8b weight per filter
    fc_bias: int = 0
    threshold: int = 0       # detection: heatmap >= threshold

    def __post_init__(self):
        object.__setattr__(self, "fc_weights", np.asarray(self.fc_weights, dtype=np.int64))

    @classmethod
    def from_bank(cls, bank: FilterBank, threshold: int = 0) -> "RoiHead":
        if bank.fc_weights is None:
            raise ValueError("filter bank carries no FC head section")
        return cls(bank.fc_weights, int(bank.fc_bias or 0), threshold)


@dataclass
class DetectionResult:
    heatmap: np.ndarray      # integer grid
    detection: np.ndarray    # boolean grid, heatmap >= threshold
    fc_op_count: int         # multiply/accumulate + per-location overhead ops
    metrics: dict | None = None


def fc_combine(bit_fmaps: np.ndarray, head: RoiHead,
               per_location_overhead: int = 2) -> DetectionResult:
    """Combine (n_filt, n_f, n_f) binary fmaps into heatmap + detection map.

    Op count per location: one multiply and one add per filter, plus the
    bias add and threshold compare (the per-location overhead).
    """
    bits = np.asarray(bit_fmaps)
    if bits.ndim != 3 or bits.shape[0] != head.fc_weights.size:
        raise ValueError(f"expected ({head.fc_weights.size}, n_f, n_f) fmaps, got {bits.shape}")
    if not np.isin(bits, (0, 1)).all():
        raise ValueError("RoI head expects 1b fmaps")
    heat = np.tensordot(head.fc_weights, bits.astype(np.int64), axes=(0, 0)) + head.fc_bias
    ops = bits.shape[1] * bits.shape[2] * (2 * head.fc_weights.size + per_location_overhead)
    return DetectionResult(heatmap=heat, detection=heat >= head.threshold, fc_op_count=ops)


def detection_metrics(pred: np.ndarray, truth: np.ndarray) -> dict:
    """FNR, TNR and discarded-patch fraction for 1b maps of equal shape.

    FNR is NaN (flagged) when the ground truth contains no positives.
    """
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth shapes differ")
    tp = int(np.sum(pred & truth))
    fn = int(np.sum(~pred & truth))
    tn = int(np.sum(~pred & ~truth))
    fp = int(np.sum(pred & ~truth))
    fnr = fn / (fn + tp) if (fn + tp) > 0 else float("nan")
    tnr = tn / (tn + fp) if (tn + fp) > 0 else float("nan")
    return {
        "fnr": fnr,
        "tnr": tnr,
        "discard_fraction": float(np.mean(~pred)),
        "positives_in_truth": tp + fn,
    }


def run_roi(image: np.ndarray, bank: FilterBank, head: RoiHead, cfg: ConvConfig,
            sim: SimParams, ctx: NoiseContext,
            truth: np.ndarray | None = None) -> tuple[DetectionResult, FeatureMapSet]:
    """On-chip 1b feature extraction followed by the off-chip head."""
    cfg = replace(cfg, mode="roi", fmap_bits=1, n_filt=bank.n_filt)
    fmaps = run_feature_extraction(image, bank, cfg, sim, ctx)
    result = fc_combine(fmaps.codes, head)
    if truth is not None:
        result.metrics = detection_metrics(result.detection, truth)
    return result, fmaps


def reference_roi_detection(image: np.ndarray, bank: FilterBank, head: RoiHead,
                            cfg: ConvConfig, sim: SimParams,
                            lux_max: float | None = None,
                            truth: np.ndarray | None = None) -> DetectionResult:
    """Software-reference detection map for the noise-free signal chain.

    With every stochastic source disabled the chain is affine in the image
    codes, so the 1b fmap of filter f is reference_convolution >= a threshold
    derived in closed form from the chain gains and the filter's offset.
    """
    from .pipeline import ideal_chain_gains, reference_convolution

    cfg = replace(cfg, mode="roi", fmap_bits=1, n_filt=bank.n_filt)
    a, b, divisor = ideal_chain_gains(cfg, sim, lux_max)
    adc = sim.adc
    ref = reference_convolution(image, bank, cfg)
    w_sums = bank.weights.sum(axis=(1, 2)).astype(np.float64)
    thresholds = (adc.full_scale / 2.0 - bank.offsets * adc.full_scale / 256.0
                  - sim.mac.v_cm - a * w_sums / divisor) * divisor / b
    bits = (ref >= thresholds[:, None, None]).astype(np.int64)
    result = fc_combine(bits, head)
    if truth is not None:
        result.metrics = detection_metrics(result.detection, truth)
    return result
