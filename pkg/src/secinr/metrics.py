"""Reconstruction-quality and ranking metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.stats import rankdata

from .spectral import as_channels

# Reports encode a perfect reconstruction as this string instead of a number.
PSNR_INF = "inf"


def _pair(a, b):
    a, b = as_channels(a), as_channels(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for images in [0, 1]; ``inf`` if identical."""
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def ssim(a, b, window: int = 11, sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM over valid window positions of the channel-mean luminance."""
    a, b = _pair(a, b)
    x, y = a.mean(axis=0), b.mean(axis=0)
    if x.shape[0] < window or x.shape[1] < window:
        raise ValueError(f"images ({x.shape[0]}x{x.shape[1]}) are smaller than the {window}x{window} window")
    w = gaussian_window(window, sigma)
    filt = lambda z: fftconvolve(z, w, mode="valid")  # noqa: E731
    mx, my = filt(x), filt(y)
    vx = filt(x * x) - mx * mx
    vy = filt(y * y) - my * my
    cxy = filt(x * y) - mx * my
    c1, c2 = k1 ** 2, k2 ** 2
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def spearman(x, y) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman expects two 1D vectors of equal length")
    if len(x) < 3:
        raise ValueError("spearman needs at least 3 observations")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if den == 0.0:
        raise ValueError("spearman is undefined for a constant input vector")
    return float(np.clip(rx @ ry / den, -1.0, 1.0))


def selection_accuracy(selected, oracle) -> float:
    """Fraction of positions where the selected parameter equals the oracle."""
    selected, oracle = list(selected), list(oracle)
    if len(selected) != len(oracle):
        raise ValueError("selected and oracle lists differ in length")
    if not selected:
        return 0.0
    return sum(float(s) == float(o) for s, o in zip(selected, oracle)) / len(selected)


@dataclass
class MetricReport:
    """Per-image PSNR/SSIM keyed by image id."""

    psnr: dict[str, float] = field(default_factory=dict)
    ssim: dict[str, float] = field(default_factory=dict)

    def add(self, image_id: str, reconstruction, target) -> None:
        self.psnr[image_id] = psnr(reconstruction, target)
        self.ssim[image_id] = ssim(reconstruction, target)

    def to_dict(self) -> dict:
        enc = lambda v: PSNR_INF if math.isinf(v) else v  # noqa: E731
        return {k: {"psnr": enc(self.psnr[k]), "ssim": self.ssim[k]} for k in sorted(self.psnr)}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        rep = cls()
        for k, v in d.items():
            rep.psnr[k] = math.inf if v["psnr"] == PSNR_INF else float(v["psnr"])
            rep.ssim[k] = float(v["ssim"])
        return rep

    def to_csv(self) -> str:
        lines = ["image_id,psnr,ssim"]
        for k, v in self.to_dict().items():
            lines.append(f"{k},{v['psnr']!r},{v['ssim']!r}".replace("'", ""))
        return "\n".join(lines) + "\n"
