"""Layer forward/backward primitives.

Everything here is functional: a forward takes (input, params) and the
matching backward takes (upstream gradient, original input, params) and
returns exact analytic gradients. Arrays keep the caller's float dtype, so
the same code runs in float32 for training and float64 for gradient checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Prng

FILTER_SIZE = 5


@dataclass
class AffineParams:
    """Weights [out_dim, in_dim] and bias [out_dim] of y = x W^T + b."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.ndim != 1 or self.b.shape[0] != self.W.shape[0]:
            raise ValueError(f"inconsistent affine shapes: W {self.W.shape}, b {self.b.shape}")


@dataclass
class ConvParams:
    """Filters [out_channels, 5, 5, in_channels] and per-channel bias."""

    filters: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.filters.ndim != 4 or self.filters.shape[1:3] != (FILTER_SIZE, FILTER_SIZE):
            raise ValueError(
                f"filters must be [out_channels, {FILTER_SIZE}, {FILTER_SIZE}, in_channels], "
                f"got {self.filters.shape}"
            )
        if self.bias.shape != (self.filters.shape[0],):
            raise ValueError(f"bias shape {self.bias.shape} does not match {self.filters.shape[0]} filters")


@dataclass(frozen=True)
class PoolSpec:
    window: int
    stride: int
    padding: str = "none"  # "none" | "same"

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ValueError(f"window and stride must be >= 1, got {self.window}, {self.stride}")
        if self.padding not in ("none", "same"):
            raise ValueError(f"padding must be 'none' or 'same', got {self.padding!r}")


@dataclass(frozen=True)
class DropoutSpec:
    keep_probability: float

    def __post_init__(self):
        if not 0.0 < self.keep_probability <= 1.0:
            raise ValueError(f"keep_probability must be in (0, 1], got {self.keep_probability}")


def affine_forward(x: np.ndarray, p: AffineParams) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != p.W.shape[1]:
        raise ValueError(f"affine input {x.shape} does not match W {p.W.shape}")
    return x @ p.W.T + p.b


def affine_backward(dy: np.ndarray, x: np.ndarray, p: AffineParams):
    if dy.shape != (x.shape[0], p.W.shape[0]):
        raise ValueError(f"affine gradient {dy.shape} does not match W {p.W.shape}, x {x.shape}")
    dx = dy @ p.W
    dW = dy.T @ x
    db = dy.sum(axis=0)
    return dx, dW, db


def _im2col(x: np.ndarray, fh: int, fw: int) -> np.ndarray:
    """Unfold valid stride-1 patches of NHWC input into rows [B*oh*ow, fh*fw*C]."""
    batch, h, w, c = x.shape
    oh, ow = h - fh + 1, w - fw + 1
    cols = np.empty((batch, oh, ow, fh, fw, c), dtype=x.dtype)
    for i in range(fh):
        for j in range(fw):
            cols[:, :, :, i, j, :] = x[:, i : i + oh, j : j + ow, :]
    return cols.reshape(batch * oh * ow, fh * fw * c)


def _col2im(dcols: np.ndarray, x_shape, fh: int, fw: int) -> np.ndarray:
    """Scatter-add patch-row gradients back onto the input grid."""
    batch, h, w, c = x_shape
    oh, ow = h - fh + 1, w - fw + 1
    d6 = dcols.reshape(batch, oh, ow, fh, fw, c)
    dx = np.zeros(x_shape, dtype=dcols.dtype)
    for i in range(fh):
        for j in range(fw):
            dx[:, i : i + oh, j : j + ow, :] += d6[:, :, :, i, j, :]
    return dx


def conv2d_forward(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Valid cross-correlation, stride 1, NHWC in, NHWK out."""
    if x.ndim != 4:
        raise ValueError(f"conv input must be [B,H,W,C], got {x.shape}")
    k, fh, fw, cf = p.filters.shape
    batch, h, w, c = x.shape
    if c != cf:
        raise ValueError(f"conv input channels {c} do not match filters {p.filters.shape}")
    if h < fh or w < fw:
        raise ValueError(f"conv input {h}x{w} smaller than {fh}x{fw} filter")
    cols = _im2col(x, fh, fw)
    out = cols @ p.filters.reshape(k, -1).T + p.bias
    return out.reshape(batch, h - fh + 1, w - fw + 1, k)


def conv2d_backward(dy: np.ndarray, x: np.ndarray, p: ConvParams):
    k, fh, fw, _ = p.filters.shape
    batch, h, w, _ = x.shape
    expected = (batch, h - fh + 1, w - fw + 1, k)
    if dy.shape != expected:
        raise ValueError(f"conv gradient shape {dy.shape}, expected {expected}")
    cols = _im2col(x, fh, fw)
    dy_mat = dy.reshape(-1, k)
    dbias = dy_mat.sum(axis=0)
    dfilters = (dy_mat.T @ cols).reshape(p.filters.shape)
    dcols = dy_mat @ p.filters.reshape(k, -1)
    dx = _col2im(dcols, x.shape, fh, fw)
    return dx, dfilters, dbias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dy: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Subgradient at exactly 0 is 0.
    return dy * (x > 0)


def _pool_geometry(h: int, w: int, spec: PoolSpec):
    """Output size and per-side padding for one pooling application."""
    win, stride = spec.window, spec.stride
    if spec.padding == "none":
        if h < win or w < win:
            raise ValueError(f"pool window {win} larger than input {h}x{w}")
        return (h - win) // stride + 1, (w - win) // stride + 1, (0, 0, 0, 0)
    oh = -(-h // stride)
    ow = -(-w // stride)
    pad_h = max((oh - 1) * stride + win - h, 0)
    pad_w = max((ow - 1) * stride + win - w, 0)
    return oh, ow, (pad_h // 2, pad_w // 2, pad_h - pad_h // 2, pad_w - pad_w // 2)


def _pad_neg_inf(x: np.ndarray, top: int, left: int, bottom: int, right: int) -> np.ndarray:
    if top == left == bottom == right == 0:
        return x
    # -inf sentinels can never win a max against real (finite) values.
    return np.pad(
        x, ((0, 0), (top, bottom), (left, right), (0, 0)),
        mode="constant", constant_values=-np.inf,
    )


def maxpool_forward(x: np.ndarray, spec: PoolSpec) -> np.ndarray:
    if x.ndim != 4:
        raise ValueError(f"pool input must be [B,H,W,C], got {x.shape}")
    batch, h, w, c = x.shape
    win, stride = spec.window, spec.stride
    oh, ow, (top, left, bottom, right) = _pool_geometry(h, w, spec)
    xp = _pad_neg_inf(x, top, left, bottom, right)
    out = np.full((batch, oh, ow, c), -np.inf, dtype=x.dtype)
    for i in range(win):
        for j in range(win):
            np.maximum(out, xp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :], out=out)
    return out


def maxpool_backward(dy: np.ndarray, x: np.ndarray, spec: PoolSpec) -> np.ndarray:
    batch, h, w, c = x.shape
    win, stride = spec.window, spec.stride
    oh, ow, (top, left, bottom, right) = _pool_geometry(h, w, spec)
    if dy.shape != (batch, oh, ow, c):
        raise ValueError(f"pool gradient shape {dy.shape}, expected {(batch, oh, ow, c)}")
    xp = _pad_neg_inf(x, top, left, bottom, right)

    # Recover each window's argmax; strict > keeps the first (row-major) winner.
    best = np.full((batch, oh, ow, c), -np.inf, dtype=x.dtype)
    best_k = np.zeros((batch, oh, ow, c), dtype=np.int64)
    for k in range(win * win):
        i, j = divmod(k, win)
        window = xp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :]
        better = window > best
        best = np.where(better, window, best)
        best_k = np.where(better, k, best_k)

    rows = np.arange(oh).reshape(1, oh, 1, 1) * stride + best_k // win - top
    cols = np.arange(ow).reshape(1, 1, ow, 1) * stride + best_k % win - left
    bb = np.arange(batch).reshape(batch, 1, 1, 1)
    cc = np.arange(c).reshape(1, 1, 1, c)
    dx = np.zeros_like(x)
    # Overlapping windows can route to the same cell, hence add.at.
    np.add.at(dx, (bb, rows, cols, cc), dy)
    return dx


def dropout_forward(x: np.ndarray, spec: DropoutSpec, mode: str, rng: Prng | None = None):
    """Inverted dropout: train-time masking with 1/keep rescale, test is identity."""
    if mode not in ("train", "test"):
        raise ValueError(f"mode must be 'train' or 'test', got {mode!r}")
    keep = spec.keep_probability
    if mode == "test" or keep == 1.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ValueError("train-mode dropout needs a random generator")
    mask = rng.mask(x.shape, keep).astype(x.dtype)
    return x * mask / x.dtype.type(keep), mask


def dropout_backward(dy: np.ndarray, mask: np.ndarray, spec: DropoutSpec) -> np.ndarray:
    return dy * mask / dy.dtype.type(spec.keep_probability)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch.

    Returns (loss, probs, dlogits) where dlogits is the gradient of the mean
    loss with respect to the logits: (probs - onehot) / batch.
    """
    if logits.ndim != 2:
        raise ValueError(f"logits must be [B, classes], got {logits.shape}")
    labels = np.asarray(labels)
    batch, n_classes = logits.shape
    if labels.shape != (batch,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {batch}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must be in 0..{n_classes - 1}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(log_probs)
    loss = -float(log_probs[np.arange(batch), labels].mean())
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1
    dlogits /= batch
    return loss, probs, dlogits
