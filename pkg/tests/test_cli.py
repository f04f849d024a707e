import numpy as np

from mantis_sim.cli import main
from mantis_sim.pgm import read_pgm


def _run(*args) -> int:
    return main([str(a) for a in args])


def test_imaging_run_produces_pgm(tmp_path):
    out = tmp_path / "run"
    assert _run("--mode", "imaging", "--seed", "3", "--out", out) == 0
    image = read_pgm(out / "image.pgm")
    assert image.shape == (128, 128)
    assert (out / "image.png").exists()
    assert (out / "resolved_config.txt").exists()
    assert (out / "metrics.csv").read_text().startswith("# config=")


def test_fe_run_ideal_profile_quantization_bound(tmp_path):
    """Ideal profile leaves only quantization between the pipeline and the
    reference; each filter's RMSE must sit below the quantization envelope
    100 * (lsb/sqrt(12)) / (2 * max|normalized| * sigma_f) for its own map."""
    out = tmp_path / "fe"
    assert _run("--mode", "fe", "--profile", "ideal", "--seed", "1", "--out", out) == 0
    rows = (out / "rmse.csv").read_text().splitlines()[2:]
    values = [float(r.split(",")[1]) for r in rows]
    bounds = [float(r.split(",")[3]) for r in rows]
    assert values  # one row per filter
    for value, bound in zip(values, bounds):
        assert value <= bound


def test_fe_run_emits_fmap_artifacts(tmp_path):
    out = tmp_path / "fe"
    assert _run("--mode", "fe", "--seed", "1", "--out", out) == 0
    assert (out / "fmap_f00.csv").exists()
    assert (out / "fmap_f00.pgm").exists()
    assert (out / "fmaps.png").exists()
    assert (out / "error_map.png").exists()


def test_roi_run_ideal_matches_reference(tmp_path):
    import json
    cfg = tmp_path / "roi.cfg"
    cfg.write_text("mode=roi\nds=2\nstride=2\n")  # the RoI operating point
    out = tmp_path / "roi"
    assert _run("--config", cfg, "--profile", "ideal", "--seed", "2", "--out", out) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["agreement_with_reference"] == 1.0
    assert 0.765 <= metrics["discard_fraction"] <= 0.843
    assert metrics["fc_op_count"] == 21250
    assert metrics["conv_op_count"] == 20_480_000
    detection = read_pgm(out / "detection.pgm")
    assert detection.shape == (25, 25)


def test_perf_run_reproduces_measured_table(tmp_path):
    from conftest import PUBLISHED_DECIMALS, matches_measured_point
    from mantis_sim.perf import MEASURED_TABLE

    out = tmp_path / "perf"
    assert _run("--mode", "perf", "--out", out) == 0
    lines = (out / "table.csv").read_text().splitlines()
    header = lines[1].split(",")
    for line in lines[2:]:
        row = dict(zip(header, line.split(",")))
        point = MEASURED_TABLE[(int(row["ds"]), int(row["stride"]))]
        for column in PUBLISHED_DECIMALS:
            assert matches_measured_point(float(row[column]), point, column)
    assert (out / "efficiency.png").exists()


def test_identical_seed_gives_byte_identical_artifacts(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert _run("--mode", "fe", "--profile", "calibrated", "--seed", "7", "--out", out) == 0
    for name in ("fmap_f00.csv", "rmse.csv", "metrics.csv", "fmap_f00.pgm",
                 "resolved_config.txt", "fmaps.png"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_trials_fan_out(tmp_path):
    out = tmp_path / "mc"
    assert _run("--mode", "imaging", "--profile", "calibrated", "--seed", "5",
                "--trials", "2", "--out", out) == 0
    a = read_pgm(out / "trial_000" / "image.pgm")
    b = read_pgm(out / "trial_001" / "image.pgm")
    assert a.shape == b.shape == (128, 128)
    assert not np.array_equal(a, b)  # independent seeds


def test_config_file_drives_run(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mode=imaging\nseed=9\nprofile=calibrated\nt_exp=0.02\n")
    out = tmp_path / "out"
    assert _run("--config", cfg, "--out", out) == 0
    echo = (out / "resolved_config.txt").read_text()
    assert "seed=9" in echo and "t_exp=0.02" in echo


def test_bad_config_exits_nonzero_without_artifacts(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("ds=5\n")
    out = tmp_path / "out"
    assert _run("--config", cfg, "--out", out) == 1
    assert "error:" in capsys.readouterr().err
    assert not out.exists() or not list(out.iterdir())


def test_missing_scene_file_cleans_partial_outputs(tmp_path):
    out = tmp_path / "out"
    code = _run("--mode", "imaging", "--scene", tmp_path / "absent.pgm", "--out", out)
    assert code == 1
    leftovers = [p for p in out.rglob("*") if p.is_file()] if out.exists() else []
    assert leftovers == []
