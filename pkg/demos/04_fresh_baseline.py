"""
Spectrum matching with a Wasserstein distance
=============================================

The baseline compares whole radial spectra instead of one centroid. For a
fixed target, deeper networks already carry more high-frequency energy, so
the matched omega tends to drop with depth.
"""

from secinr.calibration import ParamGrid, fresh_scores
from secinr.corpus import blurred_noise

target = blurred_noise((64, 64), 2.0, seed=0)
grid = ParamGrid("siren", range(10, 111, 20))

for depth in (1, 3, 5):
    scores = fresh_scores(target, "siren", (depth, 256), grid, n_seeds=5)
    best = min(scores, key=lambda p: (scores[p], p))
    print(f"depth {depth}: chosen omega {best:g}   ", "  ".join(f"{p:g}:{w:.2f}" for p, w in scores.items()))
