import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import wasserstein_distance

from secinr.calibration import (
    DEFAULT_GRIDS,
    CalibrationEntry,
    CalibrationSet,
    CellResult,
    ParamGrid,
    build_calibration_set,
    fresh_scores,
    fresh_select,
    frequency_match,
    make_config,
    model_spectrum,
    reduce_grid,
    sec_conf_select,
    wasserstein_1d,
)
from secinr.corpus import blurred_noise
from secinr.models import ModelConfig, init_network, render
from secinr.spectral import image_sec
from secinr.trainer import TrainConfig


def calib(*pairs):
    return CalibrationSet("siren", "S", entries=[CalibrationEntry(f"i{k}", s, p, 30.0)
                                                 for k, (s, p) in enumerate(pairs)])


class TestParamGrid:
    def test_defaults(self):
        assert DEFAULT_GRIDS["siren"].values == tuple(float(v) for v in range(30, 111, 10))
        assert DEFAULT_GRIDS["wire"].values == (1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
        assert len(DEFAULT_GRIDS["finer"]) == 10 and len(DEFAULT_GRIDS["fourier"]) == 9

    @pytest.mark.parametrize("values", [(), (30, 30), (40, 30), (0, 1)])
    def test_rejects(self, values):
        with pytest.raises(ValueError):
            ParamGrid("siren", values)


class TestSecConfSelect:
    def test_nearest(self):
        assert sec_conf_select(calib((2.0, 30), (8.0, 90)), 3.0) == 30

    def test_tie_goes_to_smaller_sec(self):
        assert sec_conf_select(calib((8.0, 90), (2.0, 30)), 5.0) == 30

    def test_single_entry(self):
        c = calib((4.0, 70))
        for t in (0.0, 4.0, 100.0):
            assert sec_conf_select(c, t) == 70

    def test_empty(self):
        with pytest.raises(ValueError):
            sec_conf_select(CalibrationSet("siren", "S"), 1.0)

    def test_accepts_image(self):
        img = blurred_noise((32, 32), 4, 0)
        c = calib((image_sec(img), 50), (image_sec(img) + 10, 110))
        assert sec_conf_select(c, img) == 50

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 20), min_size=1, max_size=8), st.floats(0, 20), st.floats(-5, 5))
    def test_shift_invariant(self, secs, target, delta):
        base = calib(*[(s, 10.0 * (k + 1)) for k, s in enumerate(secs)])
        moved = calib(*[(s + delta, 10.0 * (k + 1)) for k, s in enumerate(secs)])
        a = sec_conf_select(base, target)
        b = sec_conf_select(moved, target + delta)
        # float rounding of the shift can only flip exact ties
        if a != b:
            da = sorted(abs(target - s) for s in secs)
            assert da[1] - da[0] < 1e-9


class TestCalibrationSet:
    def test_json_round_trip(self, tmp_path):
        c = calib((1.5, 30), (6.25, 80))
        c.save(tmp_path / "c.json")
        raw = json.loads((tmp_path / "c.json").read_text())
        assert set(raw) == {"version", "architecture", "size", "variant", "entries"}
        assert set(raw["entries"][0]) == {"image_id", "sec", "best_param", "best_psnr"}
        assert CalibrationSet.load(tmp_path / "c.json") == c

    def test_rejects_version(self):
        d = calib((1.0, 30)).to_dict()
        d["version"] = 99
        with pytest.raises(ValueError):
            CalibrationSet.from_dict(d)


class TestGridReduction:
    def test_average_and_tie_break(self):
        cells = [CellResult("a", 30.0, 0, 20.0), CellResult("a", 30.0, 1, 22.0),
                 CellResult("a", 40.0, 0, 21.0), CellResult("a", 40.0, 1, 21.0),
                 CellResult("a", 50.0, 0, None, "diverged")]
        res = reduce_grid(cells)
        assert res.table["a"] == {30.0: 21.0, 40.0: 21.0}
        assert res.best("a") == (30.0, 21.0)
        assert len(res.failures) == 1

    def test_order_independent(self):
        cells = [CellResult("b", 30.0, 0, 10.0), CellResult("a", 40.0, 0, 12.0),
                 CellResult("a", 30.0, 0, 11.0), CellResult("b", 40.0, 0, 9.0)]
        assert reduce_grid(cells) == reduce_grid(cells[::-1])

    def test_all_diverged(self):
        res = reduce_grid([CellResult("a", 30.0, 0, None, "x")])
        with pytest.raises(ValueError):
            res.best("a")


class TestBuildCalibrationSet:
    images = [("soft", blurred_noise((8, 8), 2, 0)), ("sharp", blurred_noise((8, 8), 0, 1))]

    def test_single_point_grid(self):
        c = build_calibration_set(self.images[:1], "siren", (1, 8), ParamGrid("siren", (30,)),
                                  TrainConfig(steps=3), workers=1)
        assert [e.best_param for e in c.entries] == [30.0]
        assert c.entries[0].sec == image_sec(self.images[0][1])

    def test_deterministic_bytes(self):
        args = (self.images, "siren", (1, 8), ParamGrid("siren", (10, 30)), TrainConfig(steps=5))
        a = build_calibration_set(*args, workers=1).to_json()
        b = build_calibration_set(*args, workers=2).to_json()
        assert a == b

    def test_grid_architecture_mismatch(self):
        with pytest.raises(ValueError):
            build_calibration_set(self.images, "siren", "S", DEFAULT_GRIDS["wire"], TrainConfig(steps=1))


class TestFrequencyMatch:
    def test_self_identity(self):
        ref = make_config("siren", (2, 32), 60.0)
        res = frequency_match(ref, "siren", (2, 32), ParamGrid("siren", (30, 60, 90)), n_seeds=3,
                              render_size=(32, 32))
        assert res.matched_param == 60.0
        assert res.sec_error == 0.0
        assert not res.grid_exhausted
        assert [p for p, _ in res.table] == [30.0, 60.0, 90.0]

    def test_grid_exhausted_flag(self):
        ref = make_config("siren", (2, 32), 200.0)
        res = frequency_match(ref, "siren", (2, 32), ParamGrid("siren", (10, 20)), n_seeds=2,
                              render_size=(32, 32))
        assert res.grid_exhausted and res.matched_param == 20.0
        assert res.to_dict()["candidates"][0]["param"] == 10.0


class TestWasserstein:
    def test_identical(self):
        p = np.array([0.2, 0.3, 0.5])
        assert wasserstein_1d(p, p) == 0.0

    def test_point_masses(self):
        p, q = np.zeros(6), np.zeros(6)
        p[2], q[5] = 1, 1
        assert wasserstein_1d(p, q) == 3.0

    def test_cdf_example(self):
        assert wasserstein_1d([0.5, 0.5, 0], [1, 0, 0]) == pytest.approx(0.5)

    @pytest.mark.parametrize("bad", [[0.5, 0.6], [1.2, -0.2]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            wasserstein_1d(bad, [1.0, 0.0])

    def test_metric_properties(self, rng):
        for _ in range(30):
            p, q, r = (x / x.sum() for x in rng.uniform(size=(3, 12)))
            radii = np.arange(12)
            assert wasserstein_1d(p, q) == pytest.approx(wasserstein_distance(radii, radii, p, q), abs=1e-12)
            assert wasserstein_1d(p, q) == pytest.approx(wasserstein_1d(q, p), abs=1e-15)
            assert wasserstein_1d(p, r) <= wasserstein_1d(p, q) + wasserstein_1d(q, r) + 1e-12


class TestFreshSelect:
    def test_identical_spectrum_wins(self):
        grid = ParamGrid("siren", (10, 40, 90))
        cfg = make_config("siren", (2, 32), 40.0)
        target = np.clip(render(init_network(cfg), 32, 32, clamp=False), 0, 1)
        scores = fresh_scores(target, "siren", (2, 32), grid, n_seeds=1)
        assert min(scores, key=scores.get) == 40.0
        assert fresh_select(target, "siren", (2, 32), grid, n_seeds=1) == 40.0

    def test_blur_selects_lower_than_noise(self):
        grid = ParamGrid("siren", (10, 30, 60, 90))
        soft = blurred_noise((64, 64), 8, 0)
        sharp = blurred_noise((64, 64), 0, 1)
        lo = fresh_select(soft, "siren", "S", grid, n_seeds=3)
        hi = fresh_select(sharp, "siren", "S", grid, n_seeds=3)
        assert lo <= hi

    def test_model_spectrum_normalised(self):
        spec = model_spectrum(ModelConfig("siren", 30.0, 2, 16), 2, (16, 16))
        assert spec.sum() == pytest.approx(1.0)

    def test_constant_target_rejected(self):
        with pytest.raises(ValueError):
            fresh_select(np.full((3, 16, 16), 0.5), "siren", "S", DEFAULT_GRIDS["siren"], n_seeds=1)
