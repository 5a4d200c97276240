"""Radial Fourier analysis of images and the spectral energy centroid.

Images are ``(C, N, M)`` float arrays (a bare ``(N, M)`` array is treated as a
single channel). The DFT uses the ``1/(N*M)`` normalisation, so the summed
power spectrum equals the mean squared pixel value (Parseval).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

Statistic = Literal["mean", "median"]


@dataclass(frozen=True)
class SpectrumVariant:
    """Knobs for the SEC ablations.

    ``squared=False`` sums DFT magnitudes instead of power; ``include_dc=True``
    keeps the zero-frequency term in bin 0.
    """

    statistic: Statistic = "mean"
    squared: bool = True
    include_dc: bool = False

    def __post_init__(self):
        if self.statistic not in ("mean", "median"):
            raise ValueError(f"unknown statistic {self.statistic!r}")

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "squared": self.squared, "include_dc": self.include_dc}

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumVariant":
        return cls(statistic=d["statistic"], squared=bool(d["squared"]), include_dc=bool(d["include_dc"]))


DEFAULT_VARIANT = SpectrumVariant()


def as_channels(image) -> np.ndarray:
    """Return ``image`` as a float64 ``(C, N, M)`` array without clamping."""
    a = np.asarray(image, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3 or a.shape[0] < 1:
        raise ValueError(f"expected (N, M) or (C, N, M) array, got shape {a.shape}")
    if a.shape[1] < 2 or a.shape[2] < 2:
        raise ValueError(f"image must be at least 2x2, got {a.shape[1]}x{a.shape[2]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains non-finite values")
    return a


def as_image(image) -> np.ndarray:
    """Validate an image and clamp it into [0, 1] (ingestion contract)."""
    return np.clip(as_channels(image), 0.0, 1.0)


def dft2d(channel) -> np.ndarray:
    """Normalised 2D DFT of one ``(N, M)`` channel (``F[0, 0]`` is the mean)."""
    a = np.asarray(channel, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"dft2d expects a 2D grid, got shape {a.shape}")
    if a.shape[0] < 2 or a.shape[1] < 2:
        raise ValueError(f"grid must be at least 2x2, got {a.shape}")
    return np.fft.fft2(a) / a.size


def idft2d(coeffs) -> np.ndarray:
    """Inverse of :func:`dft2d`; returns the real part."""
    f = np.asarray(coeffs, dtype=np.complex128)
    return np.real(np.fft.ifft2(f * f.size))


def centered_indices(n: int) -> np.ndarray:
    """Centred frequency index for each standard DFT position ``0..n-1``.

    Positions below ``ceil(n/2)`` keep their index, the rest wrap to negative
    values, giving the range ``-floor(n/2) .. ceil(n/2) - 1``.
    """
    k = np.arange(n)
    return np.where(k < (n + 1) // 2, k, k - n)


def shift(u, v, n: int, m: int):
    """Map centred indices onto the standard DFT grid."""
    return np.mod(u, n), np.mod(v, m)


def max_radius(n: int, m: int) -> int:
    hn, hm = (n + 1) // 2, (m + 1) // 2
    return int(np.floor(np.sqrt(hn * hn + hm * hm)))


def radius_map(n: int, m: int) -> np.ndarray:
    """Integer radial bin ``floor(sqrt(u^2 + v^2))`` laid out on the DFT grid."""
    u = centered_indices(n)[:, None]
    v = centered_indices(m)[None, :]
    sq = u * u + v * v
    r = np.floor(np.sqrt(sq)).astype(np.int64)
    # guard against sqrt rounding just below an exact square
    r += (r + 1) * (r + 1) <= sq
    return r


def energy_spectrum(image, squared: bool = True, include_dc: bool = False) -> np.ndarray:
    """Per-radius energy summed over channels.

    Returns a vector of length ``R + 1`` with ``R = max_radius(N, M)``.
    """
    a = as_channels(image)
    _, n, m = a.shape
    coeffs = np.fft.fft2(a, axes=(1, 2)) / (n * m)
    mag = np.abs(coeffs)
    contrib = (mag * mag if squared else mag).sum(axis=0)
    r = radius_map(n, m)
    out = np.bincount(r.ravel(), weights=contrib.ravel(), minlength=max_radius(n, m) + 1)
    if not include_dc:
        out[0] = 0.0
    return out


def sec(spectrum, statistic: Statistic = "mean") -> float:
    """Centroid (or median) radius of a non-negative radial spectrum.

    An all-zero spectrum has centroid 0.
    """
    e = np.asarray(spectrum, dtype=np.float64)
    if np.any(e < 0):
        raise ValueError("spectrum entries must be non-negative")
    total = e.sum()
    if total <= 0:
        return 0.0
    p = e / total
    if statistic == "mean":
        return float(np.dot(np.arange(len(p)), p))
    if statistic == "median":
        cdf = np.cumsum(p)
        # tolerate the last cumulative value rounding to just below 1
        return float(np.argmax(cdf >= 0.5 - 1e-12))
    raise ValueError(f"unknown statistic {statistic!r}")


def image_sec(image, variant: SpectrumVariant = DEFAULT_VARIANT) -> float:
    spectrum = energy_spectrum(image, squared=variant.squared, include_dc=variant.include_dc)
    return sec(spectrum, variant.statistic)


def normalized_spectrum(image, variant: SpectrumVariant = DEFAULT_VARIANT) -> np.ndarray:
    """Spectrum scaled to unit L1 norm (all zeros stay zeros)."""
    e = energy_spectrum(image, squared=variant.squared, include_dc=variant.include_dc)
    total = e.sum()
    return e / total if total > 0 else e
