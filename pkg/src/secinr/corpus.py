"""Synthetic test images: blurred white noise and cosine gratings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

BLUR_LADDER = (0.0, 1.0, 2.0, 4.0, 8.0)


@dataclass(frozen=True)
class CorpusImage:
    image_id: str
    image: np.ndarray
    blur: float | None = None


def rescale(a) -> np.ndarray:
    """Affinely map ``a`` onto [0, 1] (constant arrays map to 0.5)."""
    a = np.asarray(a, dtype=np.float64)
    lo, hi = a.min(), a.max()
    if hi == lo:
        return np.full_like(a, 0.5)
    return (a - lo) / (hi - lo)


def blurred_noise(size: tuple[int, int], sigma: float, seed: int, channels: int = 3) -> np.ndarray:
    """White noise Gaussian-blurred at ``sigma`` pixels, rescaled to [0, 1].

    Each channel is filtered independently with periodic boundaries.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((channels, *size))
    if sigma > 0:
        noise = gaussian_filter(noise, sigma=(0, sigma, sigma), mode="wrap")
    return rescale(noise)


def blur_ladder(n_images: int, size: tuple[int, int] = (64, 64), sigmas=BLUR_LADDER,
                seed: int = 0, channels: int = 3) -> list[CorpusImage]:
    """``n_images`` noise images cycling through ``sigmas``; image ``k`` uses
    blur ``sigmas[k % len(sigmas)]`` and noise seed ``seed + k``."""
    out = []
    for k in range(n_images):
        s = float(sigmas[k % len(sigmas)])
        out.append(CorpusImage(f"blur{s:g}_s{seed + k}", blurred_noise(size, s, seed + k, channels), s))
    return out


def cosine_grating(size: tuple[int, int], freq: tuple[int, int], channels: int = 1,
                   amplitude: float = 0.5, offset: float = 0.5) -> np.ndarray:
    """``offset + amplitude * cos(2*pi*(fu*n/N + fv*m/M))`` replicated over channels.

    With ``freq = (r, 0)`` all non-DC energy falls in radial bin ``r``.
    """
    n, m = size
    fu, fv = freq
    rows = np.arange(n)[:, None] / n
    cols = np.arange(m)[None, :] / m
    g = offset + amplitude * np.cos(2 * np.pi * (fu * rows + fv * cols))
    return np.repeat(g[None], channels, axis=0)
