"""Desk-scale numerics for depth-fused attention and masked denoising loss.

Everything here runs at 64-bit precision over small dense arrays so each
operation can be checked exactly: MLP depth embedding, scaled-dot-product
cross-attention, a two-layer toy denoiser standing in for a full U-Net,
the mask-weighted noise loss, and a central-difference gradient checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

Params = dict[str, np.ndarray]
LossAndGrad = Callable[[Params], tuple[float, Params]]


def _as2d(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class MlpWeights:
    """Two affine layers with a ReLU in between: w2 @ relu(w1 @ x + b1) + b2,
    applied row-wise."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), np.float64))
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ValueError("MLP weight matrices must be 2-D")
        if self.b1.shape != (self.w1.shape[0],) or self.b2.shape != (self.w2.shape[0],):
            raise ValueError("MLP bias shapes must match their layer outputs")
        if self.w2.shape[1] != self.w1.shape[0]:
            raise ValueError("second layer input dim must equal hidden dim")

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[0]


def mlp_embed(f_d: np.ndarray, weights: MlpWeights) -> np.ndarray:
    """Row-wise MLP embedding of depth features."""
    x = _as2d(f_d, "f_d")
    if x.shape[1] != weights.in_dim:
        raise ValueError(
            f"feature dim {x.shape[1]} does not match MLP input dim {weights.in_dim}"
        )
    hidden = np.maximum(x @ weights.w1.T + weights.b1, 0.0)
    return hidden @ weights.w2.T + weights.b2


@dataclass(frozen=True)
class AttentionWeights:
    """Projections for depth cross-attention: queries from hidden states,
    keys and values from one shared depth MLP."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    mlp: MlpWeights

    def __post_init__(self):
        for name in ("wq", "wk", "wv"):
            m = np.asarray(getattr(self, name), np.float64)
            if m.ndim != 2:
                raise ValueError(f"{name} must be 2-D")
            object.__setattr__(self, name, m)
        if self.wk.shape != (self.wq.shape[0], self.mlp.out_dim):
            raise ValueError("wk must map the MLP output to the key dimension")
        if self.wv.shape[1] != self.mlp.out_dim:
            raise ValueError("wv input dim must equal the MLP output dim")

    @property
    def d(self) -> int:
        """Key dimension."""
        return self.wq.shape[0]


def rowsoftmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis (max subtracted)."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def depth_cross_attention(
    z: np.ndarray, f_d: np.ndarray, weights: AttentionWeights
) -> np.ndarray:
    """softmax(Q K^T / sqrt(d)) V with Q from z and K, V from the embedded
    depth features."""
    z = _as2d(z, "z")
    if weights.d == 0:
        raise ValueError("key dimension must be positive")
    if z.shape[1] != weights.wq.shape[1]:
        raise ValueError(
            f"hidden dim {z.shape[1]} does not match wq input {weights.wq.shape[1]}"
        )
    emb = mlp_embed(f_d, weights.mlp)
    q = z @ weights.wq.T
    k = emb @ weights.wk.T
    v = emb @ weights.wv.T
    attn = rowsoftmax(q @ k.T / math.sqrt(weights.d))
    return attn @ v


@dataclass(frozen=True)
class DenoiseBatch:
    """One masked denoising instance: noised sample, true noise, binary
    layer mask, condition vector, and integer timestep."""

    x_t: np.ndarray
    eps: np.ndarray
    mask: np.ndarray
    cond: np.ndarray
    t: int

    def __post_init__(self):
        object.__setattr__(self, "x_t", _as2d(self.x_t, "x_t"))
        object.__setattr__(self, "eps", _as2d(self.eps, "eps"))
        object.__setattr__(self, "mask", _as2d(self.mask, "mask"))
        object.__setattr__(self, "cond", np.asarray(self.cond, np.float64).reshape(-1))
        if not (self.x_t.shape == self.eps.shape == self.mask.shape):
            raise ValueError("x_t, eps, and mask must share one shape")
        if not np.isin(self.mask, (0.0, 1.0)).all():
            raise ValueError("mask entries must be 0 or 1")


@dataclass(frozen=True)
class ToyDenoiserParams:
    """affine -> tanh -> affine network predicting noise from the masked
    sample, the condition vector, and a scalar timestep feature."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), np.float64))

    def as_dict(self) -> Params:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    @classmethod
    def from_dict(cls, params: Params) -> "ToyDenoiserParams":
        return cls(w1=params["w1"], b1=params["b1"], w2=params["w2"], b2=params["b2"])

    @classmethod
    def init(cls, sample_size: int, cond_size: int, hidden: int,
             rng: np.random.Generator) -> "ToyDenoiserParams":
        in_dim = sample_size + cond_size + 1
        return cls(
            w1=rng.normal(0.0, 0.5, (hidden, in_dim)),
            b1=rng.normal(0.0, 0.1, hidden),
            w2=rng.normal(0.0, 0.5, (sample_size, hidden)),
            b2=rng.normal(0.0, 0.1, sample_size),
        )


def _denoise_features(batch: DenoiseBatch) -> np.ndarray:
    masked = (batch.x_t * batch.mask).reshape(-1)
    return np.concatenate([masked, batch.cond, [float(batch.t)]])


def toy_denoise(batch: DenoiseBatch, params: ToyDenoiserParams) -> np.ndarray:
    """Noise prediction with the toy denoiser; output matches eps in shape."""
    feats = _denoise_features(batch)
    if params.w1.shape[1] != feats.size:
        raise ValueError(
            f"denoiser expects {params.w1.shape[1]} input features, got {feats.size}"
        )
    if params.w2.shape[0] != batch.eps.size:
        raise ValueError("denoiser output size must match the noise tensor")
    hidden = np.tanh(params.w1 @ feats + params.b1)
    return (params.w2 @ hidden + params.b2).reshape(batch.eps.shape)


def layer_loss(eps: np.ndarray, eps_pred: np.ndarray, mask: np.ndarray) -> float:
    """Mean over all entries of ((eps - eps_pred) * mask)^2.

    With an all-ones mask this reduces to the plain mean-squared noise
    prediction error."""
    eps = _as2d(eps, "eps")
    eps_pred = _as2d(eps_pred, "eps_pred")
    mask = _as2d(mask, "mask")
    if not (eps.shape == eps_pred.shape == mask.shape):
        raise ValueError("eps, eps_pred, and mask must share one shape")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ValueError("mask entries must be 0 or 1")
    r = (eps - eps_pred) * mask
    return float(np.mean(r * r))


def batch_loss_and_grad(
    batches: Sequence[DenoiseBatch], params: ToyDenoiserParams
) -> tuple[float, Params]:
    """Empirical mean of layer_loss over `batches` plus analytic parameter
    gradients (manual backprop through the toy denoiser)."""
    if not batches:
        raise ValueError("need at least one batch item")
    grads = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
    total = 0.0
    inv_b = 1.0 / len(batches)
    for batch in batches:
        feats = _denoise_features(batch)
        pre = params.w1 @ feats + params.b1
        hidden = np.tanh(pre)
        pred = (params.w2 @ hidden + params.b2).reshape(batch.eps.shape)
        resid = (pred - batch.eps) * batch.mask
        total += float(np.mean(resid * resid)) * inv_b
        # d loss / d pred = (2/N) * mask^2 * (pred - eps); mask is binary
        g_pred = (2.0 / batch.eps.size) * batch.mask * resid * inv_b
        g_out = g_pred.reshape(-1)
        grads["w2"] += np.outer(g_out, hidden)
        grads["b2"] += g_out
        g_hidden = params.w2.T @ g_out
        g_pre = g_hidden * (1.0 - hidden * hidden)
        grads["w1"] += np.outer(g_pre, feats)
        grads["b1"] += g_pre
    return total, grads


def gradient_check(loss_and_grad: LossAndGrad, params: Params, step: float) -> float:
    """Max relative error between analytic gradients and central finite
    differences: max |analytic - numeric| / max(1, |numeric|)."""
    if step <= 0.0:
        raise ValueError("step must be > 0")
    loss, analytic = loss_and_grad(params)
    if not math.isfinite(loss):
        raise FloatingPointError(f"loss is not finite: {loss}")
    worst = 0.0
    for name, value in params.items():
        value = np.asarray(value, dtype=np.float64)
        flat = value.reshape(-1)
        for i in range(flat.size):
            bumped = dict(params)
            plus = value.copy().reshape(-1)
            plus[i] += step
            bumped[name] = plus.reshape(value.shape)
            up, _ = loss_and_grad(bumped)
            minus = value.copy().reshape(-1)
            minus[i] -= step
            bumped[name] = minus.reshape(value.shape)
            down, _ = loss_and_grad(bumped)
            if not (math.isfinite(up) and math.isfinite(down)):
                raise FloatingPointError("perturbed loss is not finite")
            numeric = (up - down) / (2.0 * step)
            a = float(np.asarray(analytic[name]).reshape(-1)[i])
            err = abs(a - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# whitespace text fixtures for small tensors


def save_tensor(arr: np.ndarray, path: str | Path) -> None:
    arr = _as2d(arr, "tensor")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_tensor(path: str | Path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        rows, cols = (int(v) for v in fh.readline().split())
        data = [[float(v) for v in fh.readline().split()] for _ in range(rows)]
    arr = np.array(data, dtype=np.float64)
    if arr.shape != (rows, cols):
        raise ValueError(f"tensor file shape {arr.shape} != header {(rows, cols)}")
    return arr
