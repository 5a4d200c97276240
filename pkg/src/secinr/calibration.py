"""Frequency-parameter selection: grid-search oracle, nearest-SEC lookup,
cross-architecture matching, and a Wasserstein spectrum-matching baseline."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import psnr
from .models import SIZES, ModelConfig, NumericalError, init_network, model_sec, render
from .parallel import parallel_map
from .spectral import DEFAULT_VARIANT, SpectrumVariant, as_image, image_sec, normalized_spectrum
from .trainer import TrainConfig, train

log = logging.getLogger(__name__)

CALIBRATION_VERSION = 1
FRESH_VARIANT = SpectrumVariant(statistic="mean", squared=False, include_dc=False)


@dataclass(frozen=True)
class ParamGrid:
    architecture: str
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("parameter grid is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"grid values must be strictly increasing: {vals}")
        if vals[0] <= 0:
            raise ValueError("grid values must be positive")
        object.__setattr__(self, "values", vals)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __contains__(self, v):
        return float(v) in self.values


DEFAULT_GRIDS = {
    "siren": ParamGrid("siren", tuple(range(30, 111, 10))),
    "finer": ParamGrid("finer", tuple(range(10, 101, 10))),
    "wire": ParamGrid("wire", (1, 5, 10, 15, 20, 25, 30)),
    "fourier": ParamGrid("fourier", tuple(range(1, 10))),
}


def resolve_size(size) -> tuple[int, int]:
    """``"S"``/``"M"``/``"L"`` or an explicit ``(depth, width)`` pair."""
    if isinstance(size, str):
        try:
            return SIZES[size]
        except KeyError:
            raise ValueError(f"unknown size {size!r}") from None
    depth, width = size
    return int(depth), int(width)


def size_label(size) -> str:
    if isinstance(size, str):
        return size
    d, w = resolve_size(size)
    return f"{d}x{w}"


def make_config(architecture: str, size, freq_param: float, **kwargs) -> ModelConfig:
    depth, width = resolve_size(size)
    return ModelConfig(architecture, float(freq_param), depth, width, **kwargs)


# ---------------------------------------------------------------- calibration set


@dataclass(frozen=True)
class CalibrationEntry:
    image_id: str
    sec: float
    best_param: float
    best_psnr: float


@dataclass
class CalibrationSet:
    architecture: str
    size: str
    variant: SpectrumVariant = DEFAULT_VARIANT
    entries: list[CalibrationEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "version": CALIBRATION_VERSION,
            "architecture": self.architecture,
            "size": self.size,
            "variant": self.variant.to_dict(),
            "entries": [
                {"image_id": e.image_id, "sec": e.sec, "best_param": e.best_param, "best_psnr": e.best_psnr}
                for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationSet":
        if d.get("version") != CALIBRATION_VERSION:
            raise ValueError(f"unsupported calibration version {d.get('version')!r}")
        entries = [CalibrationEntry(str(e["image_id"]), float(e["sec"]), float(e["best_param"]),
                                    float(e["best_psnr"])) for e in d["entries"]]
        for e in entries:
            if not math.isfinite(e.sec):
                raise ValueError(f"non-finite SEC for {e.image_id}")
        return cls(d["architecture"], d["size"], SpectrumVariant.from_dict(d["variant"]), entries)

    @classmethod
    def load(cls, path) -> "CalibrationSet":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


@dataclass(frozen=True)
class GridTask:
    """One training run of the grid search."""

    image_id: str
    image: np.ndarray
    config: ModelConfig
    train_cfg: TrainConfig

    @property
    def key(self):
        return (self.image_id, self.config.freq_param, self.config.seed)


@dataclass(frozen=True)
class CellResult:
    image_id: str
    param: float
    seed: int
    psnr: float | None
    error: str | None = None


def grid_tasks(images, architecture: str, size, grid: ParamGrid, train_cfg: TrainConfig,
               seeds: int = 1, seed_base: int = 0) -> list[GridTask]:
    """Cartesian product image x grid value x seed, ordered by that key."""
    tasks = []
    for image_id, img in images:
        img = as_image(img)
        for p in grid:
            for s in range(seed_base, seed_base + seeds):
                cfg = make_config(architecture, size, p, out_channels=img.shape[0], seed=s)
                tasks.append(GridTask(image_id, img, cfg, train_cfg))
    return tasks


def run_grid_task(task: GridTask) -> CellResult:
    try:
        net, _ = train(init_network(task.config), task.image, task.train_cfg)
        _, h, w = task.image.shape
        value = psnr(render(net, h, w), task.image)
    except NumericalError as exc:
        return CellResult(task.image_id, task.config.freq_param, task.config.seed, None, str(exc))
    return CellResult(task.image_id, task.config.freq_param, task.config.seed, value)


@dataclass
class GridSearchResult:
    """Seed-averaged final PSNR per (image, parameter); diverged cells omitted."""

    table: dict[str, dict[float, float]]
    failures: list[CellResult]

    def best(self, image_id: str) -> tuple[float, float]:
        """Argmax parameter (ties toward the smaller value) and its PSNR."""
        row = self.table.get(image_id)
        if not row:
            raise ValueError(f"every grid cell diverged for image {image_id!r}")
        best_p = min(row, key=lambda p: (-row[p], p))
        return best_p, row[best_p]


def reduce_grid(results) -> GridSearchResult:
    """Average seeds per cell; independent of the order of ``results``."""
    sums: dict[tuple[str, float], list[float]] = {}
    failures = []
    seen_images = []
    for r in sorted(results, key=lambda r: (r.image_id, r.param, r.seed)):
        if r.image_id not in seen_images:
            seen_images.append(r.image_id)
        if r.psnr is None:
            failures.append(r)
            continue
        sums.setdefault((r.image_id, r.param), []).append(r.psnr)
    table: dict[str, dict[float, float]] = {i: {} for i in seen_images}
    for (image_id, p), vals in sorted(sums.items()):
        table[image_id][p] = float(np.mean(vals))
    return GridSearchResult(table, failures)


def grid_search(images, architecture: str, size, grid: ParamGrid, train_cfg: TrainConfig,
                seeds: int = 1, seed_base: int = 0, workers: int | None = None) -> GridSearchResult:
    tasks = grid_tasks(images, architecture, size, grid, train_cfg, seeds, seed_base)
    return reduce_grid(parallel_map(run_grid_task, tasks, workers))


def build_calibration_set(images, architecture: str, size, grid: ParamGrid, train_cfg: TrainConfig,
                          seeds: int = 1, seed_base: int = 0, variant: SpectrumVariant = DEFAULT_VARIANT,
                          workers: int | None = None,
                          search: GridSearchResult | None = None) -> CalibrationSet:
    """Grid-search each ``(image_id, image)`` pair and record (SEC, best parameter).

    A precomputed ``search`` covering the images can be passed to skip training.
    Images whose every cell diverged are dropped with a warning.
    """
    images = [(i, as_image(a)) for i, a in images]
    if not images:
        raise ValueError("calibration needs at least one image")
    if grid.architecture != architecture:
        raise ValueError(f"grid is for {grid.architecture}, not {architecture}")
    if search is None:
        search = grid_search(images, architecture, size, grid, train_cfg, seeds, seed_base, workers)
    calib = CalibrationSet(architecture, size_label(size), variant)
    for image_id, img in images:
        try:
            best_p, best_psnr = search.best(image_id)
        except ValueError as exc:
            log.warning("rejecting calibration image: %s", exc)
            continue
        calib.entries.append(CalibrationEntry(image_id, image_sec(img, variant), best_p, best_psnr))
    if not calib.entries:
        raise ValueError("every calibration image was rejected (all grid cells diverged)")
    return calib


def nearest_entry(calib: CalibrationSet, target_sec: float) -> CalibrationEntry:
    """Entry with the closest SEC; ties resolve to the smaller SEC."""
    if not calib.entries:
        raise ValueError("calibration set is empty")
    return min(calib.entries, key=lambda e: (abs(target_sec - e.sec), e.sec))


def sec_conf_select(calib: CalibrationSet, target) -> float:
    """Frequency parameter of the calibration image whose SEC is nearest to the target's.

    ``target`` is an image, or a precomputed SEC value.
    """
    if np.ndim(target) == 0:
        target_sec = float(target)
    else:
        target_sec = image_sec(as_image(target), calib.variant)
    return nearest_entry(calib, target_sec).best_param


# ---------------------------------------------------------------- matching


@dataclass(frozen=True)
class MatchResult:
    matched_param: float
    sec_error: float
    ref_sec: float
    table: tuple[tuple[float, float], ...]  # (candidate, mean SEC)
    grid_exhausted: bool

    def to_dict(self) -> dict:
        return {
            "matched_param": self.matched_param,
            "sec_error": self.sec_error,
            "ref_sec": self.ref_sec,
            "grid_exhausted": self.grid_exhausted,
            "candidates": [{"param": p, "sec": s} for p, s in self.table],
        }


def frequency_match(ref: ModelConfig, target_arch: str, target_size, grid: ParamGrid, n_seeds: int = 10,
                    render_size: tuple[int, int] = (256, 256),
                    variant: SpectrumVariant = DEFAULT_VARIANT) -> MatchResult:
    """Pick the grid value whose untrained-model SEC is closest to the reference's.

    Seeds run from ``ref.seed`` for both sides. ``grid_exhausted`` is set when
    the reference SEC lies outside the range spanned by the candidates.
    """
    if grid.architecture != target_arch:
        raise ValueError(f"grid is for {grid.architecture}, not {target_arch}")
    ref_sec = model_sec(ref, n_seeds, render_size, variant).mean
    table = []
    for p in grid:
        cfg = make_config(target_arch, target_size, p, out_channels=ref.out_channels, seed=ref.seed,
                          wire_s0=ref.wire_s0, finer_bias_scale=ref.finer_bias_scale)
        table.append((p, model_sec(cfg, n_seeds, render_size, variant).mean))
    best_p, best_sec = min(table, key=lambda t: (abs(t[1] - ref_sec), t[0]))
    secs = [s for _, s in table]
    exhausted = ref_sec < min(secs) or ref_sec > max(secs)
    return MatchResult(best_p, abs(best_sec - ref_sec), ref_sec, tuple(table), exhausted)


# ---------------------------------------------------------------- FreSh-style baseline


def wasserstein_1d(p, q, atol: float = 1e-9) -> float:
    """W1 distance between two distributions on the radii ``0, 1, 2, ...``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("distributions must be 1D and of equal length")
    for name, d in (("p", p), ("q", q)):
        if np.any(d < 0):
            raise ValueError(f"{name} has negative mass")
        if abs(d.sum() - 1.0) > atol:
            raise ValueError(f"{name} is not normalised (sum={d.sum()!r})")
    return float(np.abs(np.cumsum(p) - np.cumsum(q)).sum())


def model_spectrum(config: ModelConfig, n_seeds: int, render_size: tuple[int, int],
                   variant: SpectrumVariant = FRESH_VARIANT) -> np.ndarray:
    """Seed-averaged normalised radial spectrum of untrained renders."""
    acc = None
    for s in range(config.seed, config.seed + n_seeds):
        spec = normalized_spectrum(render(init_network(config.with_seed(s)), *render_size, clamp=False), variant)
        acc = spec if acc is None else acc + spec
    return acc / n_seeds


def fresh_scores(target, architecture: str, size, grid: ParamGrid, n_seeds: int = 10,
                 render_size: tuple[int, int] | None = None, seed_base: int = 0,
                 variant: SpectrumVariant = FRESH_VARIANT) -> dict[float, float]:
    """W1 distance from each candidate's mean spectrum to the target's spectrum.

    Renders default to the target's resolution so the radial bins line up.
    """
    target = as_image(target)
    if render_size is None:
        render_size = target.shape[1:]
    tspec = normalized_spectrum(target, variant)
    if tspec.sum() == 0:
        raise ValueError("target spectrum is empty (constant image)")
    scores = {}
    for p in grid:
        cfg = make_config(architecture, size, p, out_channels=target.shape[0], seed=seed_base)
        mspec = model_spectrum(cfg, n_seeds, tuple(render_size), variant)
        if mspec.shape != tspec.shape:
            raise ValueError("render size must match the target resolution")
        mspec = mspec / mspec.sum()
        scores[p] = wasserstein_1d(mspec, tspec)
    return scores


def fresh_select(target, architecture: str, size, grid: ParamGrid, n_seeds: int = 10,
                 render_size: tuple[int, int] | None = None, seed_base: int = 0,
                 variant: SpectrumVariant = FRESH_VARIANT) -> float:
    """Grid value minimising the spectrum W1 distance (ties toward the smaller value)."""
    scores = fresh_scores(target, architecture, size, grid, n_seeds, render_size, seed_base, variant)
    return min(scores, key=lambda p: (scores[p], p))
