"""
Picking omega from the target's SEC
===================================

Build a tiny calibration set by grid search, then pick omega for unseen
images by nearest SEC. A 2x48 siren is small enough that it cannot memorise
a 64x64 image in 300 steps, so the best omega actually depends on the image.
The benchmark suite runs the full desk-scale protocol.
"""

from secinr.calibration import ParamGrid, build_calibration_set, frequency_match, make_config, sec_conf_select
from secinr.corpus import blurred_noise
from secinr.trainer import TrainConfig

grid = ParamGrid("siren", (10, 30, 60, 90))
cfg = TrainConfig(steps=300)
size = (64, 64)
model = (2, 48)  # depth x width

calib_images = [(f"sigma{s:g}", blurred_noise(size, s, seed=k)) for k, s in enumerate((0, 2, 8))]
calib = build_calibration_set(calib_images, "siren", model, grid, cfg)
for e in calib.entries:
    print(f"{e.image_id:8s} SEC={e.sec:6.2f}  best omega={e.best_param:g}  ({e.best_psnr:.1f} dB)")

for sigma in (0.5, 3, 6):
    target = blurred_noise(size, sigma, seed=100)
    print(f"target sigma={sigma:<4g} -> omega {sec_conf_select(calib, target):g}")

# the same SEC can be hit by another architecture: which siren omega looks like finer omega=30?
m = frequency_match(make_config("finer", "S", 30.0), "siren", "S", ParamGrid("siren", range(30, 111, 10)),
                    n_seeds=5, render_size=(64, 64))
print(f"\nfiner(30) ~ siren({m.matched_param:g}), SEC gap {m.sec_error:.2f}")
for p, s in m.table:
    print(f"  omega={p:5g}  SEC={s:6.2f}")
