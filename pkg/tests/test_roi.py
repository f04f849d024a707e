import numpy as np
import pytest

from mantis_sim.cli import _bundled
from mantis_sim.filters import load_filters
from mantis_sim.noise import ideal_context
from mantis_sim.params import SimParams
from mantis_sim.pgm import read_pgm
from mantis_sim.pipeline import ConvConfig
from mantis_sim.roi import (DetectionResult, RoiHead, detection_metrics, fc_combine,
                            reference_roi_detection, run_roi)


def _head(weights=None, bias=0, threshold=0):
    return RoiHead(np.asarray(weights if weights is not None else [1] * 16), bias, threshold)


def test_all_zero_fmaps_give_bias_heatmap():
    head = _head([2] * 16, bias=-3)
    result = fc_combine(np.zeros((16, 5, 5), dtype=int), head)
    assert np.all(result.heatmap == -3)
    assert not result.detection.any()


def test_single_all_ones_fmap_unit_weight():
    head = RoiHead(np.array([1]), 0, threshold=1)
    result = fc_combine(np.ones((1, 4, 4), dtype=int), head)
    assert np.all(result.heatmap == 1)
    assert result.detection.all()


def test_fc_op_count_matches_workload_split():
    head = _head()
    result = fc_combine(np.zeros((16, 25, 25), dtype=int), head)
    assert result.fc_op_count == 21250  # vs 20.48M on-chip MACs per frame
    from mantis_sim.perf import ops_per_frame
    assert ops_per_frame(2, 2, 16) == 20_480_000


def test_fc_combine_validates_input():
    head = _head()
    with pytest.raises(ValueError):
        fc_combine(np.zeros((8, 5, 5), dtype=int), head)
    with pytest.raises(ValueError):
        fc_combine(np.full((16, 5, 5), 2), head)


def test_detection_metrics_perfect_prediction():
    truth = np.zeros((5, 5), dtype=bool)
    truth[1:3, 1:3] = True
    m = detection_metrics(truth, truth)
    assert m["fnr"] == 0.0 and m["tnr"] == 1.0


def test_detection_metrics_all_discarded():
    truth = np.zeros((4, 4), dtype=bool)
    truth[0, 0] = True
    m = detection_metrics(np.zeros((4, 4), dtype=bool), truth)
    assert m["fnr"] == 1.0 and m["discard_fraction"] == 1.0


def test_detection_metrics_no_positives_flagged():
    m = detection_metrics(np.zeros((3, 3), dtype=bool), np.zeros((3, 3), dtype=bool))
    assert np.isnan(m["fnr"])


def test_metrics_bounded_and_recall_complement():
    rng = np.random.default_rng(0)
    pred = rng.integers(0, 2, (10, 10)).astype(bool)
    truth = rng.integers(0, 2, (10, 10)).astype(bool)
    m = detection_metrics(pred, truth)
    for key in ("fnr", "tnr", "discard_fraction"):
        assert 0.0 <= m[key] <= 1.0
    recall = np.sum(pred & truth) / truth.sum()
    assert m["fnr"] + recall == pytest.approx(1.0)


def test_head_scaling_invariance():
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, (16, 7, 7))
    w = rng.integers(-20, 21, 16)
    base = fc_combine(bits, RoiHead(w, 5, 2)).detection
    scaled = fc_combine(bits, RoiHead(w * 3, 15, 6)).detection
    assert np.array_equal(base, scaled)


def test_bundled_fixture_detection():
    """Ideal-profile run of the shipped portrait fixture: discard fraction in
    the characterized band and exact agreement with the software reference."""
    bank = load_filters(_bundled("roi_head.mfb"))
    head = RoiHead.from_bank(bank)
    scene = read_pgm(_bundled("face_scene.pgm"))
    truth = read_pgm(_bundled("face_truth.pgm")) > 0
    cfg = ConvConfig(mode="roi", ds=2, stride=2, n_filt=16, fmap_bits=1)
    sim = SimParams()

    result, fmaps = run_roi(scene, bank, head, cfg, sim, ideal_context(), truth=truth)
    assert isinstance(result, DetectionResult)
    assert 0.765 <= result.metrics["discard_fraction"] <= 0.843

    reference = reference_roi_detection(scene, bank, head, cfg, sim)
    assert np.array_equal(result.detection, reference.detection)
    assert np.array_equal(result.heatmap, reference.heatmap)
