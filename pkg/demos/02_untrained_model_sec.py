"""
What frequencies does an untrained network draw?
================================================

Render randomly initialised networks on a grid and measure the SEC of the
output. The frequency parameter moves it, depth moves it, width barely does.
"""

from secinr.models import DEFAULT_FREQ, ModelConfig, model_sec

render = (64, 64)

print("siren M, first-layer omega vs SEC (10 seeds)")
for omega in (10, 30, 60, 90):
    r = model_sec(ModelConfig.sized("siren", "M", omega), 10, render)
    lo, hi = r.ci95
    print(f"  omega={omega:3d}  SEC={r.mean:6.2f}  95% CI [{lo:.2f}, {hi:.2f}]")

print("\ndepth at width 256, default parameters")
for arch in ("siren", "fourier", "finer", "wire"):
    means = [model_sec(ModelConfig(arch, DEFAULT_FREQ[arch], d, 256), 5, render).mean for d in (1, 3, 5)]
    print(f"  {arch:8s}", "  ".join(f"d{d}={m:6.2f}" for d, m in zip((1, 3, 5), means)))

print("\nwidth at depth 3 (siren)")
for width in (64, 256, 512):
    print(f"  width={width:3d}  SEC={model_sec(ModelConfig('siren', 30.0, 3, width), 5, render).mean:.2f}")
