"""Desk-scale acceptance criteria, one test each.

Every test records a single PASS/FAIL line (shown in the terminal summary)
before asserting, so a failing criterion still reports its measurements.
"""

import time

import numpy as np
import pytest

from conftest import CRITERIA
from oracles import finite_difference_gradient, max_relative_error
from secinr import experiments as ex
from secinr.calibration import DEFAULT_GRIDS, ParamGrid, frequency_match, make_config
from secinr.models import (
    ARCHITECTURES,
    DEFAULT_FREQ,
    ModelConfig,
    coord_grid,
    flatten_params,
    gradient,
    init_network,
    mse_loss,
    unflatten_params,
)

pytestmark = pytest.mark.acceptance


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def secconf():
    t0 = time.process_time()
    study, failures = ex.secconf_study()
    return study, failures, time.process_time() - t0


def test_c01_parseval():
    t0 = time.perf_counter()
    errs = ex.parseval_errors(n_images=100, size=16)
    dt = time.perf_counter() - t0
    record(1, errs.max() <= 1e-10 and dt < 5, f"max rel error {errs.max():.2e}, {dt:.2f} s")


def test_c02_analytic_sec():
    t0 = time.perf_counter()
    secs = ex.grating_secs((1, 3, 5, 7), 32)
    dt = time.perf_counter() - t0
    ok = all(secs[r] == r for r in secs) and dt < 1
    record(2, ok, f"SEC {[secs[r] for r in sorted(secs)]}, {dt:.3f} s")


def test_c03_gradient_oracle():
    t0 = time.perf_counter()
    errs = {}
    for arch in ARCHITECTURES:
        net = init_network(ModelConfig(arch, DEFAULT_FREQ[arch], 2, 16, seed=0))
        x = coord_grid(8, 8)
        target = np.random.default_rng(5).uniform(size=(3, 8, 8))
        analytic = np.concatenate([g.ravel() for g in gradient(net, x, target)])
        numeric = finite_difference_gradient(lambda v: mse_loss(unflatten_params(net, v), x, target),
                                             flatten_params(net), h=1e-5)
        errs[arch] = max_relative_error(analytic, numeric)
    dt = time.perf_counter() - t0
    ok = all(e < 1e-3 for e in errs.values()) and dt < 60
    record(3, ok, ", ".join(f"{a} {e:.1e}" for a, e in errs.items()) + f"; {dt:.1f} s")


def test_c04_omega_monotonicity():
    sweep = ex.omega_sweep((10, 30, 60, 90), "M", 10, (64, 64))
    means = [sweep[w].mean for w in sorted(sweep)]
    ok = all(b > a for a, b in zip(means, means[1:]))
    record(4, ok, "mean SEC " + " < ".join(f"{m:.2f}" for m in means))


def test_c05_depth_effect():
    study = ex.depth_study(ARCHITECTURES, (1, 3, 5), 256, 10, (64, 64))
    depth_ok = {a: study[(a, 5)].mean > study[(a, 1)].mean for a in ("siren", "fourier", "finer")}
    ratio = {d: study[("wire", d)].mean / study[("siren", d)].mean for d in (1, 3, 5)}
    wire_ok = all(r > 5 for r in ratio.values())
    detail = ("depth 1->5: " + ", ".join(f"{a} {study[(a, 1)].mean:.2f}->{study[(a, 5)].mean:.2f}"
                                         for a in depth_ok)
              + "; wire/siren " + ", ".join(f"d{d} {r:.2f}x" for d, r in ratio.items()))
    record(5, all(depth_ok.values()) and wire_ok, detail)


def test_c06_training_sanity():
    t0 = time.process_time()
    trace, sm100, sm_final = ex.training_sanity(steps=2000, size=(64, 64), sigma=2.0)
    dt = time.process_time() - t0
    gain = trace.psnrs[-1] - trace.psnrs[0]
    ok = gain >= 10 and sm_final < 0.1 * sm100 and dt < 600
    record(6, ok, f"PSNR {trace.psnrs[0]:.1f} -> {trace.psnrs[-1]:.1f} dB, smoothed loss ratio "
                  f"{sm_final / sm100:.4f}, {dt:.0f} s CPU")


def test_c07_secconf_end_to_end(secconf):
    study, failures, dt = secconf
    s, d, o, acc = study.psnr_secconf, study.psnr_default, study.psnr_oracle, study.accuracy
    ok = s >= d and s >= o - 0.5 and acc >= 0.5 and dt < 45 * 60 and not failures
    record(7, ok, f"PSNR secconf {s:.2f} / fixed {d:.2f} / oracle {o:.2f} dB, accuracy {acc:.3f}, "
                  f"{dt / 60:.1f} min CPU")


def test_c08_complexity_correlation(secconf):
    rho = secconf[0].correlation("default")
    record(8, rho < -0.5, f"spearman(SEC, PSNR@30) = {rho:.3f}")


def test_c09_matching():
    grid = DEFAULT_GRIDS["siren"]
    me = frequency_match(make_config("siren", "S", 60.0), "siren", "S", grid, 10, (256, 256))
    fs = frequency_match(make_config("finer", "S", 30.0), "siren", "S", grid, 10, (256, 256))
    wire = {s: frequency_match(make_config("siren", s, 30.0), "wire", s, DEFAULT_GRIDS["wire"], 10, (256, 256))
            for s in ("M", "L")}
    ok = (me.matched_param == 60.0 and me.sec_error == 0.0
          and fs.matched_param > 30 and fs.sec_error < 1.0
          and all(w.grid_exhausted and w.sec_error > 10 for w in wire.values()))
    detail = (f"self {me.matched_param:g}/{me.sec_error:g}; finer30->siren {fs.matched_param:g} "
              f"(err {fs.sec_error:.2f}); " + ", ".join(
                  f"siren30->wire {s}: {w.matched_param:g} err {w.sec_error:.1f} exhausted={w.grid_exhausted}"
                  for s, w in wire.items()))
    record(9, ok, detail)


def test_c10_fresh_depth_trend():
    trend = ex.fresh_depth_trend((1, 3, 5), 256, ex.FRESH_GRID, 10, (64, 64), 2.0)
    chosen = [trend[d][0] for d in (1, 3, 5)]
    ok = all(b <= a for a, b in zip(chosen, chosen[1:]))
    record(10, ok, "chosen omega by depth 1/3/5: " + " / ".join(f"{c:g}" for c in chosen))


def test_c11_ablation(secconf):
    study = secconf[0]
    rho, rho_mag = study.correlation("default"), study.correlation("magnitude")
    record(11, abs(rho) >= abs(rho_mag), f"|rho| power {abs(rho):.3f} vs magnitude {abs(rho_mag):.3f}")


def test_c12_finer_width_probe():
    narrow, wide = ex.finer_hidden_variance(128), ex.finer_hidden_variance(512)
    record(12, narrow > wide, f"hidden pre-activation variance width 128 {narrow:.3f} vs 512 {wide:.3f}")
