import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from secinr.cli import main
from secinr.corpus import blurred_noise
from secinr.experiments import read_csv, read_manifest
from secinr.imageio import save_png

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def assert_csv_matches(path, golden):
    got, want = Path(path).read_text(), Path(golden).read_text()
    assert got.splitlines()[:2] == want.splitlines()[:2]
    g, w = read_csv(got), read_csv(want)
    assert [r["r"] for r in g] == [r["r"] for r in w]
    np.testing.assert_allclose([float(r["energy"]) for r in g], [float(r["energy"]) for r in w], atol=1e-15)


@pytest.fixture
def sample_png(tmp_path):
    p = tmp_path / "sample.png"
    save_png(blurred_noise((32, 32), 2, 3), p)
    return p


class TestAnalyze:
    def test_constant_png(self, capsys, tmp_path):
        p = tmp_path / "flat.png"
        save_png(np.full((3, 16, 16), 0.5), p)
        code, out, _ = run(capsys, "analyze", p)
        assert code == 0 and out == "sec 0.0\n"

    def test_cosine_golden(self, capsys, tmp_path):
        code, out, _ = run(capsys, "analyze", GOLDEN / "cosine3.pgm", "--spectrum", tmp_path / "s.csv")
        assert code == 0 and out == "sec 3.0\n"
        assert_csv_matches(tmp_path / "s.csv", GOLDEN / "analyze_cosine3.csv")
        assert read_manifest(tmp_path / "s.csv.manifest.json")["command"] == "analyze"

    @pytest.mark.parametrize("flags,golden,expected", [
        (["--statistic", "median", "--include-dc"], "analyze_cosine3_median_dc.csv", "sec 0.0\n"),
        (["--magnitude"], "analyze_cosine3_magnitude.csv", "sec 3.0\n"),
    ])
    def test_variant_flags(self, capsys, tmp_path, flags, golden, expected):
        code, out, _ = run(capsys, "analyze", GOLDEN / "cosine3.pgm", *flags, "--spectrum", tmp_path / "s.csv")
        assert code == 0 and out == expected
        assert_csv_matches(tmp_path / "s.csv", GOLDEN / golden)

    def test_corrupt_file_is_data_error(self, capsys, tmp_path):
        p = tmp_path / "bad.png"
        p.write_bytes(b"\x89PNG\r\n\x1a\nnot really")
        code, _, err = run(capsys, "analyze", p)
        assert code == 2 and "PNG" in err

    def test_unknown_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["analyze", "x.png", "--frobnicate"])
        assert info.value.code == 1


class TestModelSec:
    def test_deterministic_output(self, capsys, tmp_path):
        args = ["model-sec", "--arch", "siren", "--size", "1x16", "--seeds", "3", "--render-size", "16"]
        code, out1, _ = run(capsys, *args, "--out", tmp_path / "a.csv")
        _, out2, _ = run(capsys, *args, "--out", tmp_path / "b.csv")
        assert code == 0 and out1 == out2
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        rows = read_csv((tmp_path / "a.csv").read_text())
        assert [r["seed"] for r in rows] == ["0", "1", "2"]
        assert out1.splitlines()[-1].startswith("mean ")
        m = read_manifest(tmp_path / "a.csv.manifest.json")
        assert m["args"]["seeds"] == 3 and m["args"]["arch"] == "siren"

    def test_invalid_architecture(self):
        with pytest.raises(SystemExit) as info:
            main(["model-sec", "--arch", "relu"])
        assert info.value.code == 1


class TestCalibrateSelect:
    def test_shipped_calibration(self, capsys, sample_png):
        calib = resources.files("secinr") / "data" / "example_calibration_siren_S.json"
        code, out, _ = run(capsys, "select", sample_png, "--calibration", calib)
        assert code == 0
        doc = json.loads(calib.read_text())
        assert float(out) in {e["best_param"] for e in doc["entries"]}

    def test_calibrate_then_select(self, capsys, tmp_path, sample_png):
        args = ["calibrate", "--synthetic", "2", "--image-size", "8x8", "--size", "1x8", "--grid", "10,30",
                "--steps", "3"]
        assert run(capsys, *args, "--out", tmp_path / "a.json")[0] == 0
        assert run(capsys, *args, "--out", tmp_path / "b.json")[0] == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        code, out, _ = run(capsys, "select", sample_png, "--calibration", tmp_path / "a.json")
        assert code == 0 and float(out) in (10.0, 30.0)

    def test_bad_grid_is_usage_error(self, capsys, tmp_path):
        code, _, _ = run(capsys, "calibrate", "--synthetic", "1", "--grid", "30,10", "--out", tmp_path / "c.json")
        assert code == 1

    def test_missing_calibration_is_data_error(self, capsys, tmp_path, sample_png):
        code, _, _ = run(capsys, "select", sample_png, "--calibration", tmp_path / "none.json")
        assert code == 2


class TestMatchFresh:
    def test_self_match(self, capsys, tmp_path):
        code, out, _ = run(capsys, "match", "--ref-arch", "siren", "--ref-size", "1x16", "--ref-param", "30",
                           "--target-arch", "siren", "--grid", "10,30,60", "--seeds", "2", "--render-size", "16",
                           "--out", tmp_path / "m.json")
        assert code == 0 and out == "matched 30 sec_error 0.0\n"
        doc = json.loads((tmp_path / "m.json").read_text())
        assert [c["param"] for c in doc["candidates"]] == [10.0, 30.0, 60.0]

    def test_fresh_prints_grid_value(self, capsys, sample_png):
        code, out, _ = run(capsys, "fresh", sample_png, "--size", "1x16", "--grid", "10,30", "--seeds", "1")
        assert code == 0 and float(out) in (10.0, 30.0)


class TestTrain:
    def test_outputs(self, capsys, tmp_path, sample_png):
        code, out, _ = run(capsys, "train", sample_png, "--size", "1x16", "--steps", "5", "--trace",
                           tmp_path / "t.csv", "--output", tmp_path / "r.png", "--checkpoint", tmp_path / "n.json")
        assert code == 0 and out.startswith("psnr ")
        assert (tmp_path / "t.csv").read_text().startswith("step,loss,psnr\n")
        assert (tmp_path / "r.png").exists() and (tmp_path / "n.json").exists()

    def test_divergence_exit_code(self, capsys, sample_png):
        code, _, err = run(capsys, "train", sample_png, "--size", "1x16", "--steps", "3", "--lr", "1e300",
                           "--precision", "float64")
        assert code == 3 and "numerical" in err


class TestBenchmark:
    def test_spectral_suite_reproducible(self, capsys, tmp_path):
        code, out, _ = run(capsys, "benchmark", "--suite", "spectral", "--out", tmp_path / "a")
        run(capsys, "benchmark", "--suite", "spectral", "--out", tmp_path / "b")
        assert code == 0
        assert "spectral.parseval pass" in out and "spectral.analytic_sec pass" in out
        for name in ("summary.json", "manifest.json", "spectral_gratings.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert read_manifest(tmp_path / "a" / "manifest.json")["args"]["suites"] == ["spectral"]
