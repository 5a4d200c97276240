"""Desk-scale experiment suites and result emission.

Each suite returns a :class:`SuiteResult` holding the measured values, the
pass/fail outcome of its checks and plot-ready tables. ``run_benchmark``
writes one CSV per table plus ``summary.json`` and ``manifest.json``; none of
the files contain timings, so re-runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    DEFAULT_GRIDS,
    FRESH_VARIANT,
    CalibrationSet,
    ParamGrid,
    build_calibration_set,
    fresh_scores,
    frequency_match,
    grid_search,
    make_config,
    sec_conf_select,
)
from .corpus import blur_ladder, blurred_noise, cosine_grating
from .metrics import selection_accuracy, spearman
from .models import (
    ARCHITECTURES,
    DEFAULT_FREQ,
    ModelConfig,
    activation_stats,
    coord_grid,
    flatten_params,
    gradient,
    init_network,
    model_sec,
    mse_loss,
    unflatten_params,
)
from .spectral import DEFAULT_VARIANT, SpectrumVariant, energy_spectrum, image_sec
from .trainer import TrainConfig, smoothed, train

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "secinr-manifest"
CSV_SCHEMA_VERSION = 1


# ---------------------------------------------------------------- manifests and tables


def make_manifest(command: str, args: dict) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "tool": "secinr",
        "tool_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "command": command,
        "args": _jsonable(args),
    }


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    m = json.loads(Path(path).read_text())
    if m.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path} is not a run manifest")
    return m


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def csv_text(header, rows) -> str:
    """CSV with a schema-version comment line, floats written with ``repr``."""
    buf = io.StringIO()
    buf.write(f"# schema_version={CSV_SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


@dataclass
class SuiteResult:
    name: str
    values: dict = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary(self) -> dict:
        return {"values": _jsonable(self.values), "checks": dict(self.checks), "failures": list(self.failures)}


# ---------------------------------------------------------------- spectral suite


def parseval_errors(n_images: int = 100, size: int = 16, seed: int = 0) -> np.ndarray:
    """Relative Parseval residual for random 3-channel images."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(n_images):
        a = rng.uniform(size=(3, size, size))
        e = energy_spectrum(a, squared=True, include_dc=True)
        errs.append(abs(e.sum() - np.sum(a * a) / (size * size)) / e.sum())
    return np.array(errs)


def grating_secs(radii=(1, 3, 5, 7), size: int = 32) -> dict[int, float]:
    return {r: image_sec(cosine_grating((size, size), (r, 0))) for r in radii}


def suite_spectral() -> SuiteResult:
    res = SuiteResult("spectral")
    errs = parseval_errors()
    secs = grating_secs()
    res.values = {"parseval_max_rel_error": float(errs.max()), "grating_sec": secs}
    res.checks = {
        "parseval": bool(errs.max() <= 1e-10),
        "analytic_sec": all(secs[r] == r for r in secs),
    }
    res.tables["spectral_gratings.csv"] = (["radius", "sec"], [[r, s] for r, s in secs.items()])
    return res


# ---------------------------------------------------------------- gradient suite


def gradient_check(architecture: str, depth: int = 2, width: int = 16, size: int = 8, h: float = 1e-5,
                   seed: int = 0) -> float:
    """Max relative error between backprop and central differences, in float64."""
    net = init_network(ModelConfig(architecture, DEFAULT_FREQ[architecture], depth, width, seed=seed))
    coords = coord_grid(size, size)
    target = np.random.default_rng(seed).uniform(size=(3, size, size))
    analytic = np.concatenate([g.ravel() for g in gradient(net, coords, target)])
    theta = flatten_params(net)
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        old = theta[i]
        theta[i] = old + h
        up = mse_loss(unflatten_params(net, theta), coords, target)
        theta[i] = old - h
        down = mse_loss(unflatten_params(net, theta), coords, target)
        theta[i] = old
        numeric[i] = (up - down) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def suite_gradients() -> SuiteResult:
    res = SuiteResult("gradients")
    errs = {a: gradient_check(a) for a in ARCHITECTURES}
    res.values = {"max_rel_error": errs}
    res.checks = {"gradient_oracle": all(e < 1e-3 for e in errs.values())}
    res.tables["gradient_check.csv"] = (["architecture", "max_rel_error"], [[a, e] for a, e in errs.items()])
    return res


# ---------------------------------------------------------------- model SEC suite


def omega_sweep(omegas=(10, 30, 60, 90), size="M", n_seeds: int = 10, render_size=(64, 64)):
    out = {}
    for w in omegas:
        out[float(w)] = model_sec(make_config("siren", size, w), n_seeds, render_size)
    return out


def depth_study(architectures=ARCHITECTURES, depths=(1, 3, 5), width: int = 256, n_seeds: int = 10,
                render_size=(64, 64)):
    """Mean untrained-model SEC per (architecture, depth) at default parameters."""
    return {(a, d): model_sec(ModelConfig(a, DEFAULT_FREQ[a], d, width), n_seeds, render_size)
            for a in architectures for d in depths}


def suite_model_sec(render_size=(64, 64), n_seeds: int = 10) -> SuiteResult:
    res = SuiteResult("model_sec")
    sweep = omega_sweep(n_seeds=n_seeds, render_size=render_size)
    means = [sweep[w].mean for w in sorted(sweep)]
    study = depth_study(n_seeds=n_seeds, render_size=render_size)
    depths = sorted({d for _, d in study})
    depth_ok = {a: study[(a, depths[-1])].mean > study[(a, depths[0])].mean
                for a in ("siren", "fourier", "finer")}
    wire_ratio = {d: study[("wire", d)].mean / study[("siren", d)].mean for d in depths}
    res.values = {
        "omega_mean_sec": {w: sweep[w].mean for w in sorted(sweep)},
        "depth_mean_sec": {f"{a}/{d}": r.mean for (a, d), r in study.items()},
        "wire_over_siren": wire_ratio,
    }
    res.checks = {
        "omega_monotone": all(b > a for a, b in zip(means, means[1:])),
        "depth_effect": all(depth_ok.values()),
        "wire_outlier": all(r > 5 for r in wire_ratio.values()),
    }
    rows = []
    for w in sorted(sweep):
        lo, hi = sweep[w].ci95
        rows.append(["siren", 3, 256, w, sweep[w].mean, lo, hi])
    for (a, d), r in study.items():
        lo, hi = r.ci95
        rows.append([a, d, 256, DEFAULT_FREQ[a], r.mean, lo, hi])
    res.tables["model_sec.csv"] = (["architecture", "depth", "width", "param", "mean_sec", "ci_low", "ci_high"],
                                   rows)
    return res


# ---------------------------------------------------------------- training suite


def training_sanity(steps: int = 2000, size=(64, 64), sigma: float = 2.0, seed: int = 0,
                    learning_rate: float = 1e-3):
    target = blurred_noise(size, sigma, seed)
    net = init_network(make_config("siren", "M", 30.0, seed=seed))
    _, trace = train(net, target, TrainConfig(steps=steps, learning_rate=learning_rate))
    sm = smoothed(trace.losses, 100)
    return trace, float(sm[100]), float(sm[-1])


def suite_training(steps: int = 2000) -> SuiteResult:
    res = SuiteResult("training")
    trace, sm100, sm_final = training_sanity(steps)
    gain = trace.psnrs[-1] - trace.psnrs[0]
    res.values = {"initial_psnr": trace.psnrs[0], "final_psnr": trace.psnrs[-1], "psnr_gain": gain,
                  "smoothed_loss_100": sm100, "smoothed_loss_final": sm_final}
    res.checks = {"psnr_gain": bool(gain >= 10.0), "loss_trend": bool(sm_final < 0.1 * sm100)}
    res.tables["training_trace.csv"] = (["step", "loss", "psnr"],
                                        [[s, l, p] for s, l, p in zip(trace.steps, trace.losses, trace.psnrs)])
    return res


# ---------------------------------------------------------------- SEC-conf suite

SECCONF_GRID = ParamGrid("siren", (10, 30, 60, 90))
SECCONF_SIZE = (128, 128)


def stratified_split(corpus, n_calib: int, seed: int = 0):
    """Pick ``n_calib`` calibration images spread over the SEC range.

    Images are sorted by SEC and cut into ``n_calib`` contiguous strata; one
    image is drawn from each stratum with ``seed``. Returns ``(calib, test)``
    preserving corpus order.
    """
    order = sorted(range(len(corpus)), key=lambda k: (image_sec(corpus[k].image), corpus[k].image_id))
    strata = np.array_split(np.array(order), n_calib)
    rng = np.random.default_rng(seed)
    chosen = {int(rng.choice(s)) for s in strata}
    calib = [c for k, c in enumerate(corpus) if k in chosen]
    test = [c for k, c in enumerate(corpus) if k not in chosen]
    return calib, test


@dataclass
class SecConfStudy:
    calibration: CalibrationSet
    table: dict[str, dict[float, float]]
    test_ids: list[str]
    selected: dict[str, float]
    oracle: dict[str, float]
    secs: dict[str, float]
    secs_magnitude: dict[str, float]
    default_param: float

    def mean_psnr(self, choice: dict[str, float]) -> float:
        return float(np.mean([self.table[i][choice[i]] for i in self.test_ids]))

    @property
    def psnr_secconf(self) -> float:
        return self.mean_psnr(self.selected)

    @property
    def psnr_default(self) -> float:
        return self.mean_psnr({i: self.default_param for i in self.test_ids})

    @property
    def psnr_oracle(self) -> float:
        return self.mean_psnr(self.oracle)

    @property
    def accuracy(self) -> float:
        return selection_accuracy([self.selected[i] for i in self.test_ids], [self.oracle[i] for i in self.test_ids])

    def correlation(self, variant: str = "default") -> float:
        """Spearman of SEC against final PSNR at the default parameter over the whole corpus."""
        secs = self.secs if variant == "default" else self.secs_magnitude
        ids = sorted(self.table)
        return spearman([secs[i] for i in ids], [self.table[i][self.default_param] for i in ids])


def secconf_study(n_images: int = 12, size=SECCONF_SIZE, grid: ParamGrid = SECCONF_GRID, steps: int = 1000,
                  n_calib: int = 4, split_seed: int = 0, corpus_seed: int = 0, default_param: float = 30.0,
                  workers: int | None = None) -> tuple[SecConfStudy, list]:
    corpus = blur_ladder(n_images, tuple(size), seed=corpus_seed)
    images = [(c.image_id, c.image) for c in corpus]
    search = grid_search(images, "siren", "S", grid, TrainConfig(steps=steps), workers=workers)
    calib_imgs, test_imgs = stratified_split(corpus, n_calib, split_seed)
    calib = build_calibration_set([(c.image_id, c.image) for c in calib_imgs], "siren", "S", grid,
                                  TrainConfig(steps=steps), search=search)
    test_ids = [c.image_id for c in test_imgs if c.image_id in search.table and search.table[c.image_id]]
    study = SecConfStudy(
        calibration=calib,
        table=search.table,
        test_ids=test_ids,
        selected={c.image_id: sec_conf_select(calib, c.image) for c in test_imgs},
        oracle={i: search.best(i)[0] for i in test_ids},
        secs={c.image_id: image_sec(c.image) for c in corpus},
        secs_magnitude={c.image_id: image_sec(c.image, SpectrumVariant(squared=False)) for c in corpus},
        default_param=float(default_param),
    )
    return study, search.failures


def suite_secconf(workers: int | None = None, **kwargs) -> SuiteResult:
    res = SuiteResult("secconf")
    study, failures = secconf_study(workers=workers, **kwargs)
    res.failures = [f"{f.image_id} param={f.param:g} seed={f.seed}: {f.error}" for f in failures]
    rho = study.correlation("default")
    rho_mag = study.correlation("magnitude")
    res.values = {
        "psnr_secconf": study.psnr_secconf, "psnr_default": study.psnr_default, "psnr_oracle": study.psnr_oracle,
        "accuracy": study.accuracy, "spearman_default": rho, "spearman_magnitude": rho_mag,
        "calibration_ids": [e.image_id for e in study.calibration.entries],
    }
    res.checks = {
        "secconf_vs_default": study.psnr_secconf >= study.psnr_default,
        "secconf_vs_oracle": study.psnr_secconf >= study.psnr_oracle - 0.5,
        "selection_accuracy": study.accuracy >= 0.5,
        "complexity_correlation": rho < -0.5,
        "ablation_squared": abs(rho) >= abs(rho_mag),
    }
    params = sorted({p for row in study.table.values() for p in row})
    calib_ids = set(res.values["calibration_ids"])
    rows = []
    for i in sorted(study.table):
        row = study.table[i]
        rows.append([i, "calib" if i in calib_ids else "test", study.secs[i], study.secs_magnitude[i],
                     study.selected.get(i, ""), study.oracle.get(i, ""), *[row.get(p, "") for p in params]])
    res.tables["secconf_grid.csv"] = (["image_id", "split", "sec", "sec_magnitude", "secconf_param",
                                       "oracle_param", *[f"psnr_{p:g}" for p in params]], rows)
    res.values["calibration"] = study.calibration.to_dict()
    return res


# ---------------------------------------------------------------- matching suite


def suite_matching(n_seeds: int = 10, render_size=(256, 256)) -> SuiteResult:
    res = SuiteResult("matching")
    grids = DEFAULT_GRIDS
    self_match = frequency_match(make_config("siren", "S", 60.0), "siren", "S", grids["siren"], n_seeds, render_size)
    finer_to_siren = frequency_match(make_config("finer", "S", 30.0), "siren", "S", grids["siren"], n_seeds,
                                     render_size)
    to_wire = {s: frequency_match(make_config("siren", s, 30.0), "wire", s, grids["wire"], n_seeds, render_size)
               for s in ("M", "L")}
    res.values = {
        "self": self_match.to_dict(), "finer30_to_siren_S": finer_to_siren.to_dict(),
        **{f"siren30_to_wire_{s}": m.to_dict() for s, m in to_wire.items()},
    }
    res.checks = {
        "self_identity": self_match.matched_param == 60.0 and self_match.sec_error == 0.0,
        "finer_to_siren": finer_to_siren.matched_param > 30 and finer_to_siren.sec_error < 1.0,
        "wire_exhausted": all(m.grid_exhausted and m.sec_error > 10 for m in to_wire.values()),
    }
    rows = []
    for name, m in [("self", self_match), ("finer30_to_siren_S", finer_to_siren),
                    *[(f"siren30_to_wire_{s}", m) for s, m in to_wire.items()]]:
        for p, s in m.table:
            rows.append([name, p, s, m.ref_sec, int(p == m.matched_param)])
    res.tables["matching.csv"] = (["experiment", "param", "mean_sec", "ref_sec", "matched"], rows)
    return res


# ---------------------------------------------------------------- FreSh-style suite

FRESH_GRID = ParamGrid("siren", tuple(range(10, 111, 10)))


def fresh_depth_trend(depths=(1, 3, 5), width: int = 256, grid: ParamGrid = FRESH_GRID, n_seeds: int = 10,
                      size=(64, 64), sigma: float = 2.0, seed: int = 0):
    """FreSh-style choice for one mid-frequency target across model depths."""
    target = blurred_noise(tuple(size), sigma, seed)
    out = {}
    for d in depths:
        scores = fresh_scores(target, "siren", (d, width), grid, n_seeds)
        out[d] = (min(scores, key=lambda p: (scores[p], p)), scores)
    return out


def suite_fresh(n_seeds: int = 10) -> SuiteResult:
    res = SuiteResult("fresh")
    trend = fresh_depth_trend(n_seeds=n_seeds)
    chosen = [trend[d][0] for d in sorted(trend)]
    res.values = {"chosen": {d: trend[d][0] for d in sorted(trend)}}
    res.checks = {"non_increasing_in_depth": all(b <= a for a, b in zip(chosen, chosen[1:]))}
    rows = [[d, p, w, int(p == trend[d][0])] for d in sorted(trend) for p, w in trend[d][1].items()]
    res.tables["fresh_depth.csv"] = (["depth", "param", "w1", "chosen"], rows)
    return res


# ---------------------------------------------------------------- Finer width probe


def finer_hidden_variance(width: int, depth: int = 3, omega: float = 30.0, n_seeds: int = 10,
                          grid=(64, 64)) -> float:
    """Mean sine-argument variance of the hidden layers (the first layer is excluded)."""
    coords = coord_grid(*grid)
    vals = []
    for s in range(n_seeds):
        stats = activation_stats(init_network(ModelConfig("finer", omega, depth, width, seed=s)), coords)
        vals.extend(st.pre_variance for st in stats[1:])
    return float(np.mean(vals))


def suite_finer(widths=(128, 512)) -> SuiteResult:
    res = SuiteResult("finer")
    var = {w: finer_hidden_variance(w) for w in widths}
    res.values = {"hidden_pre_variance": var}
    res.checks = {"narrow_higher_variance": var[min(widths)] > var[max(widths)]}
    res.tables["finer_variance.csv"] = (["width", "pre_variance"], [[w, v] for w, v in var.items()])
    return res


# ---------------------------------------------------------------- benchmark driver

SUITES = {
    "spectral": suite_spectral,
    "gradients": suite_gradients,
    "model_sec": suite_model_sec,
    "training": suite_training,
    "secconf": suite_secconf,
    "matching": suite_matching,
    "fresh": suite_fresh,
    "finer": suite_finer,
}


def run_suite(name: str, workers: int | None = None) -> SuiteResult:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    fn = SUITES[name]
    return fn(workers=workers) if name == "secconf" else fn()


def run_benchmark(suites, out_dir, workers: int | None = None) -> dict[str, SuiteResult]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for name in suites:
        t0 = time.perf_counter()
        results[name] = r = run_suite(name, workers)
        log.info("suite %s finished in %.1f s", name, time.perf_counter() - t0)
        for fname, (header, rows) in r.tables.items():
            (out / fname).write_text(csv_text(header, rows))
    summary = {name: r.summary() for name, r in results.items()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    write_manifest(out / "manifest.json", make_manifest("benchmark", {"suites": list(suites)}))
    return results
