"""Full-batch Adam training of a network against one target image."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .models import Network, NumericalError, astype, coord_grid, loss_and_gradient, mse_loss, with_params
from .spectral import as_image


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    log_every: int = 1
    # arithmetic precision of the optimisation loop; results are returned in float64
    precision: str = "float32"
    # full-batch training is deterministic; the seed is recorded for manifests
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision!r}")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``;
    inputs are left untouched."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and state must have matching lengths")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    t = state.t + 1
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        step = cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
        new_p.append(p - step)
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, t)


def psnr_from_mse(mse: float) -> float:
    return math.inf if mse == 0 else -10.0 * math.log10(mse)


@dataclass
class TrainTrace:
    steps: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    psnrs: list[float] = field(default_factory=list)

    def log(self, step: int, loss: float) -> None:
        if self.steps and step <= self.steps[-1]:
            raise ValueError("trace steps must be strictly increasing")
        self.steps.append(step)
        self.losses.append(loss)
        self.psnrs.append(psnr_from_mse(loss))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "loss", "psnr"])
        for s, l, p in zip(self.steps, self.losses, self.psnrs):
            w.writerow([s, repr(l), repr(p)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrainTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        tr = cls()
        for r in rows:
            tr.steps.append(int(r["step"]))
            tr.losses.append(float(r["loss"]))
            tr.psnrs.append(float(r["psnr"]))
        return tr


class DivergenceError(NumericalError):
    """Training produced a non-finite loss."""


def train(net: Network, target, cfg: TrainConfig) -> tuple[Network, TrainTrace]:
    """Fit ``net`` to ``target`` (``(C, H, W)`` in [0, 1]) with full-batch Adam.

    The trace logs the loss *before* the update at step 0, every
    ``log_every`` steps, and the loss of the final network at ``cfg.steps``.
    """
    dt = np.dtype(cfg.precision)
    target = as_image(target).astype(dt)
    _, h, w = target.shape
    coords = coord_grid(h, w).astype(dt)
    current = astype(net, dt)
    params = [p.copy() for p in current.params]
    state = AdamState.zeros_like(params)
    trace = TrainTrace()
    for step in range(cfg.steps):
        try:
            loss, grads = loss_and_gradient(current, coords, target)
        except NumericalError as exc:
            raise DivergenceError(f"step {step}: {exc}", exc.layer) from exc
        if not math.isfinite(loss):
            raise DivergenceError(f"loss became non-finite at step {step}")
        if step % cfg.log_every == 0:
            trace.log(step, loss)
        params, state = adam_step(params, grads, state, cfg)
        current = with_params(current, params)
    try:
        final_loss = mse_loss(current, coords, target)
    except NumericalError as exc:
        raise DivergenceError(f"after final step: {exc}", exc.layer) from exc
    if not math.isfinite(final_loss):
        raise DivergenceError("loss became non-finite after the final step")
    trace.log(cfg.steps, final_loss)
    return astype(current, np.float64), trace


def smoothed(values, window: int = 100) -> np.ndarray:
    """Trailing moving average; the first entries average what is available."""
    v = np.asarray(values, dtype=np.float64)
    c = np.cumsum(np.insert(v, 0, 0.0))
    idx = np.arange(1, len(v) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)
