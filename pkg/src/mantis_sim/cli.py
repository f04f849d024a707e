"""Command-line front end.

    mantis-sim --mode fe --scene scene.pgm --filters bank.mfb --out results/

Modes: imaging (8b capture), fe (feature extraction + RMSE vs the software
reference), roi (1b fmaps + detection head), perf (analytical metrics table
only).  Every run writes a resolved-config echo; identical config + seed
gives byte-identical artifacts.  Flags override config-file keys.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import perf, report
from .config import ConfigError, RunConfig, config_hash, parse_config, resolved_text
from .filters import load_filters
from .noise import NoiseContext
from .pgm import read_pgm, render_to_pgm, write_pgm
from .pipeline import frame_timing, reference_convolution, run_feature_extraction, run_imaging
from .roi import RoiHead, detection_metrics, reference_roi_detection, run_roi


def _bundled(name: str) -> Path:
    return Path(resources.files("mantis_sim").joinpath("data", name))


class _ArtifactSink:
    """Tracks written files so a failed run leaves no partial outputs."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(p)
        return p

    def discard_all(self):
        for p in self.written:
            p.unlink(missing_ok=True)


def _write_csv(path: Path, header_comment: str, columns: list[str], rows: list[dict]) -> None:
    lines = [f"# {header_comment}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _metrics_csv(sink: _ArtifactSink, cfg: RunConfig, tag: str, extra: dict | None = None):
    """Table-style metrics row for the active configuration."""
    timing = frame_timing(cfg.conv_config())
    point = perf.MEASURED_TABLE.get((cfg.ds, cfg.stride))
    fps = point.fps if point else timing.fps
    row = {
        "ds": cfg.ds, "stride": cfg.stride, "n_filt": cfg.n_filt,
        "fps_profile": fps, "fps_model": timing.fps, "t_conv_ms": timing.t_conv * 1e3,
        "throughput_mops": perf.throughput(cfg.ds, cfg.stride, fps, cfg.n_filt) / 1e6,
        "data_reduction_pct": perf.data_reduction(cfg.ds, cfg.stride, cfg.n_filt, cfg.fmap_bits) * 100,
    }
    if extra:
        row.update(extra)
    _write_csv(sink.path("metrics.csv"), f"config={tag}", list(row.keys()), [row])


def _load_scene(cfg: RunConfig) -> np.ndarray:
    if cfg.scene:
        return read_pgm(cfg.scene)
    default = "face_scene.pgm" if cfg.mode == "roi" else "scene_blobs.pgm"
    return read_pgm(_bundled(default))


def _load_bank(cfg: RunConfig):
    if cfg.filters:
        return load_filters(cfg.filters)
    return load_filters(_bundled("roi_head.mfb"))


def _run_one(cfg: RunConfig, out_dir: Path) -> None:
    sink = _ArtifactSink(out_dir)
    try:
        _run_into(cfg, sink)
    except Exception:
        sink.discard_all()
        raise


def _run_into(cfg: RunConfig, sink: _ArtifactSink) -> None:
    tag = config_hash(cfg)
    sink.path("resolved_config.txt").write_text(resolved_text(cfg))
    ctx = NoiseContext(cfg.seed, cfg.noise_flags())
    lux_max = cfg.scene_lux_max if cfg.scene_lux_max > 0 else None

    if cfg.mode == "perf":
        rows = perf.metrics_table()
        _write_csv(sink.path("table.csv"), f"config={tag}", list(rows[0].keys()), rows)
        report.save_efficiency_chart(rows, sink.path("efficiency.png"))
        return

    if cfg.mode == "imaging":
        scene = _load_scene(cfg)
        image = run_imaging(scene, cfg.conv_config("imaging"), cfg.sim, ctx, lux_max=lux_max)
        write_pgm(sink.path("image.pgm"), image, comment=f"config={tag}")
        report.save_image_figure(image, sink.path("image.png"), f"imaging (seed {cfg.seed})")
        _metrics_csv(sink, cfg, tag, extra={"code_mean": float(image.mean()),
                                            "code_sigma": float(image.std())})
        return

    scene = _load_scene(cfg)
    bank = _load_bank(cfg)
    cfg = dataclasses.replace(cfg, n_filt=bank.n_filt)

    if cfg.mode == "fe":
        conv_cfg = cfg.conv_config()
        fmaps = run_feature_extraction(scene, bank, conv_cfg, cfg.sim, ctx, lux_max=lux_max)
        ref = reference_convolution(scene, bank, conv_cfg)
        capture = run_imaging(scene, cfg.conv_config("imaging"), cfg.sim, ctx, lux_max=lux_max)
        ref_capture = reference_convolution(capture, bank, conv_cfg)
        rmse_rows = []
        for f in range(bank.n_filt):
            np.savetxt(sink.path(f"fmap_f{f:02d}.csv"), fmaps.codes[f], fmt="%d",
                       delimiter=",", header=f"config={tag} filter={f}")
            write_pgm(sink.path(f"fmap_f{f:02d}.pgm"), render_to_pgm(fmaps.codes[f]),
                      comment=f"config={tag}")
            codes = fmaps.codes[f].astype(float)
            peak = np.abs(codes - codes.mean()).max()
            # One full code of RMS error against the map's own peak deviation:
            # anything quantization-limited sits well below this envelope.
            bound = 100.0 / (2.0 * peak) if peak > 0 else float("inf")
            rmse_rows.append({
                "filter": f,
                "rmse_pct": perf.rmse_percent(ref[f], fmaps.codes[f]),
                "rmse_vs_capture_pct": perf.rmse_percent(ref_capture[f], fmaps.codes[f]),
                "quant_bound_pct": bound,
            })
        _write_csv(sink.path("rmse.csv"), f"config={tag}",
                   ["filter", "rmse_pct", "rmse_vs_capture_pct", "quant_bound_pct"], rmse_rows)
        report.save_fmap_grid(fmaps.codes, sink.path("fmaps.png"), f"fmaps (profile {cfg.profile})")
        worst = max(range(bank.n_filt), key=lambda f: rmse_rows[f]["rmse_pct"])
        norm = lambda a: (a - a.mean()) / a.std()  # noqa: E731
        report.save_error_map(norm(ref[worst]), norm(fmaps.codes[worst].astype(float)),
                              sink.path("error_map.png"), f"filter {worst} normalized error")
        _metrics_csv(sink, cfg, tag,
                     extra={"rmse_mean_pct": float(np.mean([r["rmse_pct"] for r in rmse_rows]))})
        return

    if cfg.mode == "roi":
        head = RoiHead.from_bank(bank, threshold=cfg.roi_threshold)
        result, fmaps = run_roi(scene, bank, head, cfg.conv_config("roi"), cfg.sim, ctx)
        reference = reference_roi_detection(scene, bank, head, cfg.conv_config("roi"),
                                            cfg.sim, lux_max=lux_max)
        np.savetxt(sink.path("heatmap.csv"), result.heatmap, fmt="%d", delimiter=",",
                   header=f"config={tag}")
        write_pgm(sink.path("detection.pgm"), result.detection * 255, comment=f"config={tag}")
        metrics = {
            "config": tag,
            "discard_fraction": float(np.mean(~result.detection)),
            "fc_op_count": result.fc_op_count,
            "conv_op_count": perf.ops_per_frame(cfg.ds, cfg.stride, cfg.n_filt),
            "agreement_with_reference": float(np.mean(result.detection == reference.detection)),
        }
        truth_path = _bundled("face_truth.pgm")
        if not cfg.scene and truth_path.exists():
            truth = read_pgm(truth_path) > 0
            if truth.shape == result.detection.shape:
                metrics.update(detection_metrics(result.detection, truth))
        sink.path("metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
        report.save_heatmap(result.heatmap, result.detection, sink.path("heatmap.png"),
                            f"RoI (profile {cfg.profile})")
        _metrics_csv(sink, cfg, tag)
        return

    raise ConfigError(f"unhandled mode {cfg.mode!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mantis-sim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", type=Path, help="key=value configuration file")
    parser.add_argument("--mode", choices=("imaging", "fe", "roi", "perf"))
    parser.add_argument("--filters", type=Path, help="MANTISFB filter bank")
    parser.add_argument("--scene", type=Path, help="128x128 binary PGM scene")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--profile", choices=("ideal", "calibrated"))
    parser.add_argument("--trials", type=int, help="independent seeded Monte-Carlo runs")
    parser.add_argument("--out", type=Path, default=Path("out"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else RunConfig()
        overrides = {}
        for key in ("mode", "seed", "profile", "trials"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        for key in ("filters", "scene"):
            if getattr(args, key) is not None:
                overrides[key] = str(getattr(args, key))
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)

        out_dir = Path(args.out)
        if cfg.trials <= 1:
            _run_one(cfg, out_dir)
        else:
            for trial in range(cfg.trials):
                trial_cfg = dataclasses.replace(cfg, seed=cfg.seed + trial, trials=1)
                _run_one(trial_cfg, out_dir / f"trial_{trial:03d}")
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
