"""Coordinate MLPs (Siren, Fourier features, Wire, Finer) in plain numpy.

Networks are immutable: training produces new :class:`Network` values via
:func:`with_params`. Gradients are analytic; Wire's complex activations are
carried as separate real and imaginary arrays.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .spectral import DEFAULT_VARIANT, SpectrumVariant, image_sec

ARCHITECTURES = ("siren", "fourier", "wire", "finer")
SIZES = {"S": (2, 128), "M": (3, 256), "L": (4, 512)}
DEFAULT_FREQ = {"siren": 30.0, "fourier": 1.0, "wire": 10.0, "finer": 30.0}

HIDDEN_OMEGA = 30.0
FOURIER_FEATURES = 256
CHECKPOINT_VERSION = 1


class NumericalError(FloatingPointError):
    """A forward or backward pass produced non-finite values."""

    def __init__(self, message: str, layer: int | None = None):
        super().__init__(message)
        self.layer = layer


@dataclass(frozen=True)
class ModelConfig:
    architecture: str
    freq_param: float
    hidden_depth: int = 3
    hidden_width: int = 256
    out_channels: int = 3
    seed: int = 0
    wire_s0: float = 10.0
    finer_bias_scale: float = 1.0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}; expected one of {ARCHITECTURES}")
        if not self.freq_param > 0:
            raise ValueError(f"freq_param must be positive, got {self.freq_param}")
        if self.hidden_depth < 1:
            raise ValueError("hidden_depth must be >= 1")
        if self.hidden_width < 2:
            raise ValueError("hidden_width must be >= 2")
        if self.out_channels < 1:
            raise ValueError("out_channels must be >= 1")

    @classmethod
    def sized(cls, architecture: str, size: str, freq_param: float | None = None, **kwargs) -> "ModelConfig":
        """Build a config from a named size ``S``, ``M`` or ``L``."""
        try:
            depth, width = SIZES[size]
        except KeyError:
            raise ValueError(f"unknown size {size!r}; expected one of {sorted(SIZES)}") from None
        if freq_param is None:
            freq_param = DEFAULT_FREQ[architecture]
        return cls(architecture, float(freq_param), depth, width, **kwargs)

    def with_seed(self, seed: int) -> "ModelConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Layer:
    """One affine map followed by an activation.

    ``kind`` is one of ``sine``, ``finer``, ``gabor``, ``relu`` or ``linear``.
    Complex Gabor layers store weight as ``(2, out, in)`` and bias as
    ``(2, out)`` (real part first).
    """

    kind: str
    weight: np.ndarray
    bias: np.ndarray
    scale: float = 1.0

    @property
    def is_complex(self) -> bool:
        return self.weight.ndim == 3


@dataclass(frozen=True)
class Network:
    config: ModelConfig
    layers: tuple[Layer, ...]
    # fixed Gaussian frequency matrix of the Fourier embedding; not trained
    embedding: np.ndarray | None = field(default=None)

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    @property
    def dtype(self):
        return self.layers[0].weight.dtype


def astype(net: Network, dtype) -> Network:
    """Cast every array of ``net`` (including the embedding) to ``dtype``."""
    net = with_params(net, [p.astype(dtype) for p in net.params])
    if net.embedding is not None:
        net = replace(net, embedding=net.embedding.astype(dtype))
    return net


def with_params(net: Network, params) -> Network:
    """Return a copy of ``net`` whose trainable arrays are ``params``."""
    params = list(params)
    if len(params) != 2 * len(net.layers):
        raise ValueError("parameter list does not match network layout")
    layers = []
    for i, layer in enumerate(net.layers):
        w, b = params[2 * i], params[2 * i + 1]
        if w.shape != layer.weight.shape or b.shape != layer.bias.shape:
            raise ValueError(f"shape mismatch in layer {i}")
        layers.append(replace(layer, weight=w, bias=b))
    return replace(net, layers=tuple(layers))


def flatten_params(net: Network) -> np.ndarray:
    return np.concatenate([p.ravel() for p in net.params])


def unflatten_params(net: Network, flat) -> Network:
    flat = np.asarray(flat, dtype=np.float64)
    if flat.size != net.n_params:
        raise ValueError(f"expected {net.n_params} values, got {flat.size}")
    out, pos = [], 0
    for p in net.params:
        out.append(flat[pos:pos + p.size].reshape(p.shape).copy())
        pos += p.size
    return with_params(net, out)


# ---------------------------------------------------------------- init


def _uniform(rng, bound, shape):
    return rng.uniform(-bound, bound, size=shape)


def init_network(config: ModelConfig) -> Network:
    """Deterministically initialise a network from ``config`` (seeded)."""
    rng = np.random.default_rng(config.seed)
    arch, w, depth = config.architecture, config.hidden_width, config.hidden_depth
    siren_bound = lambda n: np.sqrt(6.0 / n) / HIDDEN_OMEGA  # noqa: E731
    layers: list[Layer] = []
    embedding = None

    if arch == "siren":
        layers.append(Layer("sine", _uniform(rng, 0.5, (w, 2)), _uniform(rng, 1 / np.sqrt(2), w), config.freq_param))
        for _ in range(depth - 1):
            layers.append(Layer("sine", _uniform(rng, siren_bound(w), (w, w)),
                                _uniform(rng, siren_bound(w), w), HIDDEN_OMEGA))
        out_bound = siren_bound(w)
        layers.append(Layer("linear", _uniform(rng, out_bound, (config.out_channels, w)),
                            _uniform(rng, out_bound, config.out_channels)))

    elif arch == "finer":
        k = config.finer_bias_scale
        layers.append(Layer("finer", _uniform(rng, 0.5, (w, 2)), _uniform(rng, k, w), config.freq_param))
        for _ in range(depth - 1):
            layers.append(Layer("finer", _uniform(rng, siren_bound(w), (w, w)),
                                _uniform(rng, 1 / np.sqrt(w), w), HIDDEN_OMEGA))
        out_bound = siren_bound(w)
        layers.append(Layer("linear", _uniform(rng, out_bound, (config.out_channels, w)),
                            _uniform(rng, out_bound, config.out_channels)))

    elif arch == "fourier":
        embedding = rng.normal(0.0, config.freq_param, size=(FOURIER_FEATURES, 2))
        fan_in = 2 * FOURIER_FEATURES
        for _ in range(depth):
            layers.append(Layer("relu", _uniform(rng, np.sqrt(6.0 / fan_in), (w, fan_in)), np.zeros(w)))
            fan_in = w
        bound = 1 / np.sqrt(w)
        layers.append(Layer("linear", _uniform(rng, bound, (config.out_channels, w)),
                            _uniform(rng, bound, config.out_channels)))

    else:  # wire
        bound = 1 / np.sqrt(2)
        layers.append(Layer("gabor", _uniform(rng, bound, (w, 2)), _uniform(rng, bound, w), config.freq_param))
        bound = 1 / np.sqrt(w)
        for _ in range(depth - 1):
            layers.append(Layer("gabor", _uniform(rng, bound, (2, w, w)), _uniform(rng, bound, (2, w)),
                                config.freq_param))
        layers.append(Layer("linear", _uniform(rng, bound, (config.out_channels, w)),
                            _uniform(rng, bound, config.out_channels)))

    return Network(config, tuple(layers), embedding)


# ---------------------------------------------------------------- forward


def coord_grid(height: int, width: int) -> np.ndarray:
    """Pixel-centre coordinates in [-1, 1]^2, shape ``(H*W, 2)``, row-major.

    Column 0 runs along the height axis, column 1 along the width axis.
    """
    if height < 1 or width < 1:
        raise ValueError("grid dimensions must be positive")
    ys = -1.0 + (2.0 * np.arange(height) + 1.0) / height
    xs = -1.0 + (2.0 * np.arange(width) + 1.0) / width
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([yy.ravel(), xx.ravel()], axis=1)


def _check(arr, where: str, layer: int):
    # a finite sum proves every entry finite; fall back to the full scan otherwise
    if not np.isfinite(arr.sum()) and not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values in {where} of layer {layer}", layer)


def _gabor(zr, zi, omega, s0):
    """Complex Gabor wavelet exp(j*omega*z - |s0*z|^2) as (real, imag)."""
    if zi is None:
        g = np.exp(-(s0 * zr) ** 2)
    else:
        g = np.exp(-omega * zi - s0 * s0 * (zr * zr + zi * zi))
    ph = omega * zr
    return g * np.cos(ph), g * np.sin(ph)


def _run(net: Network, x: np.ndarray, keep: bool = False):
    """Forward pass. Returns ``(output, cache)``; the cache is a list of
    per-layer tuples ``(kind, input, pre, post)`` when ``keep`` is set."""
    s0 = net.config.wire_s0
    cache = []
    h = x
    hi = None  # imaginary part of a complex hidden state
    if net.embedding is not None:
        proj = 2.0 * np.pi * (x @ net.embedding.T)
        h = np.concatenate([np.sin(proj), np.cos(proj)], axis=1)

    for i, layer in enumerate(net.layers):
        inp = (h, hi)
        if layer.is_complex:
            wr, wi = layer.weight
            zr = h @ wr.T - hi @ wi.T + layer.bias[0]
            zi = h @ wi.T + hi @ wr.T + layer.bias[1]
        else:
            zr = h @ layer.weight.T
            zr += layer.bias
            zi = None
        kind = layer.kind
        if kind == "linear":
            out = zr
            pre = zr
        elif kind == "sine":
            # the sine backward pass only needs the argument, so scale in place
            zr *= layer.scale
            pre = zr
            out = np.sin(pre)
        elif kind == "finer":
            pre = layer.scale * (np.abs(zr) + 1.0) * zr
            out = np.sin(pre)
        elif kind == "relu":
            pre = zr
            out = np.maximum(zr, 0.0)
        elif kind == "gabor":
            pre = (zr, zi)
            out = _gabor(zr, zi, layer.scale, s0)
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
        if kind == "gabor":
            _check(out[0], "activation", i)
            _check(out[1], "activation", i)
        else:
            _check(out, "activation", i)
        if keep:
            cache.append((inp, (zr, zi), pre, out))
        if kind == "gabor":
            h, hi = out
            # the real part alone feeds the output head
            if net.layers[i + 1].kind == "linear":
                hi = None
        else:
            h, hi = out, None
    return h, cache


def forward(net: Network, coords) -> np.ndarray:
    """Evaluate the network at ``coords`` of shape ``(..., 2)``."""
    c = np.asarray(coords, dtype=net.dtype)
    if c.shape[-1] != 2:
        raise ValueError(f"coordinates must have trailing dimension 2, got {c.shape}")
    lead = c.shape[:-1]
    y, _ = _run(net, c.reshape(-1, 2))
    return y.reshape(*lead, y.shape[-1])


def render(net: Network, height: int, width: int, clamp: bool = True) -> np.ndarray:
    """Network output on the pixel grid as a ``(C, H, W)`` image."""
    if height < 2 or width < 2:
        raise ValueError("render size must be at least 2x2")
    y = forward(net, coord_grid(height, width))
    img = y.reshape(height, width, -1).transpose(2, 0, 1)
    return np.clip(img, 0.0, 1.0) if clamp else img


# ---------------------------------------------------------------- gradient


def _target_rows(target, n_points: int, channels: int, dtype=np.float64) -> np.ndarray:
    t = np.asarray(target, dtype=dtype)
    if t.ndim == 2:
        t = t[None]
    if t.ndim != 3 or t.shape[0] != channels or t.shape[1] * t.shape[2] != n_points:
        raise ValueError(f"target shape {t.shape} does not match {n_points} points x {channels} channels")
    return t.reshape(channels, -1).T


def loss_and_gradient(net: Network, coords, target) -> tuple[float, list[np.ndarray]]:
    """Mean squared error and its gradient w.r.t. every trainable array.

    ``coords`` is ``(H*W, 2)`` and ``target`` a ``(C, H, W)`` image.
    """
    dt = net.dtype
    x = np.asarray(coords, dtype=dt).reshape(-1, 2)
    t = _target_rows(target, x.shape[0], net.config.out_channels, dt)
    y, cache = _run(net, x, keep=True)
    resid = y - t
    loss = float(np.mean(resid * resid, dtype=np.float64))
    dy = 2.0 * resid / resid.size

    s0 = net.config.wire_s0
    grads: list[np.ndarray] = [None] * (2 * len(net.layers))
    dh, dhi = dy, None
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        (h, hi), (zr, zi), pre, out = cache[i]
        kind = layer.kind
        dzi = None
        if kind == "linear":
            dzr = dh
        elif kind == "sine":
            # dh and the cached argument are not used again: reuse their buffers
            dzr = np.multiply(dh, layer.scale, out=dh if dh is not dy else None)
            dzr *= np.cos(pre, out=pre)
        elif kind == "finer":
            # d/dz [(|z| + 1) z] = 2|z| + 1, continuous through the kink
            dzr = dh * np.cos(pre) * layer.scale * (2.0 * np.abs(zr) + 1.0)
        elif kind == "relu":
            dzr = dh * (zr > 0)
        else:  # gabor
            ar, ai = out
            om = layer.scale
            dar = dh
            dai = dhi if dhi is not None else 0.0
            dzr = dar * (-2 * s0 * s0 * zr * ar - om * ai) + dai * (-2 * s0 * s0 * zr * ai + om * ar)
            if zi is not None:
                gi = -om - 2 * s0 * s0 * zi
                dzi = dar * gi * ar + dai * gi * ai
        _check(dzr, "gradient", i)
        if dzi is None:
            grads[2 * i] = dzr.T @ h
            grads[2 * i + 1] = dzr.sum(axis=0)
            if i > 0:
                dh, dhi = dzr @ layer.weight, None
        else:
            _check(dzi, "gradient", i)
            wr, wi = layer.weight
            grads[2 * i] = np.stack([dzr.T @ h + dzi.T @ hi, dzi.T @ h - dzr.T @ hi])
            grads[2 * i + 1] = np.stack([dzr.sum(axis=0), dzi.sum(axis=0)])
            if i > 0:
                dh, dhi = dzr @ wr + dzi @ wi, dzi @ wr - dzr @ wi
    return loss, grads


def gradient(net: Network, coords, target) -> list[np.ndarray]:
    return loss_and_gradient(net, coords, target)[1]


def mse_loss(net: Network, coords, target) -> float:
    x = np.asarray(coords, dtype=net.dtype).reshape(-1, 2)
    t = _target_rows(target, x.shape[0], net.config.out_channels, net.dtype)
    y, _ = _run(net, x)
    return float(np.mean((y - t) ** 2, dtype=np.float64))


# ---------------------------------------------------------------- analysis


@dataclass(frozen=True)
class ModelSec:
    mean: float
    samples: tuple[float, ...]
    seeds: tuple[int, ...]

    @property
    def sem(self) -> float:
        s = np.asarray(self.samples)
        return float(s.std(ddof=1) / np.sqrt(len(s))) if len(s) > 1 else 0.0

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.sem
        return self.mean - half, self.mean + half


def model_sec(config: ModelConfig, n_seeds: int = 10, render_size: tuple[int, int] = (256, 256),
              variant: SpectrumVariant = DEFAULT_VARIANT, clamp: bool = False) -> ModelSec:
    """SEC of untrained renders, for seeds ``config.seed .. config.seed + n_seeds - 1``.

    Renders are analysed unclamped by default: freshly initialised outputs are
    centred near zero and clipping them at 0 would inject spurious harmonics.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    seeds = tuple(config.seed + k for k in range(n_seeds))
    vals = []
    for s in seeds:
        net = init_network(config.with_seed(s))
        vals.append(image_sec(render(net, *render_size, clamp=clamp), variant))
    return ModelSec(float(np.mean(vals)), tuple(vals), seeds)


@dataclass(frozen=True)
class LayerStats:
    layer: int
    pre_variance: float
    post_variance: float
    pre_hist: tuple[np.ndarray, np.ndarray]
    post_hist: tuple[np.ndarray, np.ndarray]


def _flat(v):
    if isinstance(v, tuple):
        return np.concatenate([a.ravel() for a in v if a is not None])
    return v.ravel()


def activation_stats(net: Network, coords, bins: int = 64) -> list[LayerStats]:
    """Variance and 64-bin histograms of each hidden layer's activation input
    (``pre``, e.g. the sine argument) and output (``post``)."""
    x = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    _, cache = _run(net, x, keep=True)
    stats = []
    for i, (layer, (_, _, pre, out)) in enumerate(zip(net.layers, cache)):
        if layer.kind == "linear":
            continue
        p, q = _flat(pre), _flat(out)
        stats.append(LayerStats(i, float(p.var()), float(q.var()),
                                np.histogram(p, bins=bins), np.histogram(q, bins=bins)))
    return stats


# ---------------------------------------------------------------- checkpoints


def save_network(net: Network, path) -> None:
    """Write a JSON checkpoint (config + flat parameters). Floats round-trip exactly."""
    doc = {
        "format": "secinr-network",
        "version": CHECKPOINT_VERSION,
        "config": net.config.to_dict(),
        "params": flatten_params(net).tolist(),
        "embedding": None if net.embedding is None else net.embedding.ravel().tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_network(path) -> Network:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "secinr-network":
        raise ValueError(f"{path} is not a network checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    cfg = ModelConfig(**doc["config"])
    net = unflatten_params(init_network(cfg), doc["params"])
    if doc["embedding"] is not None:
        net = replace(net, embedding=np.asarray(doc["embedding"], dtype=np.float64).reshape(net.embedding.shape))
    return net
