"""Mini-batch Adam training with hold-out validation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Model, loss_and_grads, predict_batch
from .tensor import Prng
from .text import split_dataset

# Offset so the shuffle/dropout stream never aliases the split stream,
# which is seeded with the bare seed.
_TRAIN_STREAM_OFFSET = 0x5EED

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


class NumericalFault(Exception):
    """A loss or gradient stopped being finite."""


@dataclass
class TrainConfig:
    epochs: int = 100
    batches_per_epoch: int = 32
    learning_rate: float = 5e-6
    l2_strength: float = 1.5e-4
    seed: int = 0
    eval_fraction: float = 0.2

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batches_per_epoch < 1:
            raise ValueError(f"batches_per_epoch must be >= 1, got {self.batches_per_epoch}")
        if self.learning_rate < 0 or self.l2_strength < 0:
            raise ValueError("learning_rate and l2_strength must be >= 0")
        if not 0.0 < self.eval_fraction < 1.0:
            raise ValueError(f"eval_fraction must be in (0, 1), got {self.eval_fraction}")


@dataclass
class AdamState:
    """First/second moment accumulators aligned with the parameter dict."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    learning_rate: float
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], learning_rate: float, **kwargs) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            learning_rate=learning_rate,
            **kwargs,
        )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState):
    """One in-place Adam update with bias correction.

    Validates every gradient before touching any parameter, so a non-finite
    gradient leaves the model untouched. The update is computed as
    (lr*sqrt(bc2)/bc1) * m / (sqrt(v) + eps*sqrt(bc2)), which equals the
    textbook lr * m_hat / (sqrt(v_hat) + eps) while touching each array once.
    """
    if set(grads) != set(params):
        raise ValueError("gradient keys do not match parameter keys")
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericalFault(f"non-finite gradient in {name}")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    alpha = state.learning_rate * np.sqrt(bc2) / bc1
    denom_eps = state.epsilon * np.sqrt(bc2)
    for name, g in grads.items():
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        update = np.sqrt(v)
        update += denom_eps
        np.divide(m, update, out=update)
        update *= alpha
        params[name] -= update
    return params, state


def make_batches(n_examples: int, batches_per_epoch: int, rng: Prng) -> list[np.ndarray]:
    """Shuffle 0..n-1 and split into near-equal index batches.

    Batch sizes differ by at most one; the larger batches come first. Every
    index appears in exactly one batch.
    """
    if batches_per_epoch > n_examples:
        raise ValueError(f"cannot make {batches_per_epoch} batches from {n_examples} examples")
    perm = rng.permutation(n_examples)
    base, extra = divmod(n_examples, batches_per_epoch)
    batches = []
    start = 0
    for i in range(batches_per_epoch):
        size = base + (1 if i < extra else 0)
        batches.append(perm[start : start + size])
        start += size
    return batches


@dataclass
class TrainLog:
    steps: list[tuple[int, float]] = field(default_factory=list)
    val_top1: list[tuple[int, float]] = field(default_factory=list)


def split_encoded(codes: np.ndarray, labels: np.ndarray, eval_fraction: float, seed: int):
    """(train_idx, eval_idx) over rows of an encoded dataset, matching the
    raw-dialogue split for the same seed."""
    train_idx, eval_idx = split_dataset(list(range(len(codes))), eval_fraction, seed)
    return np.asarray(train_idx, dtype=np.int64), np.asarray(eval_idx, dtype=np.int64)


def _validation_accuracy(model: Model, codes: np.ndarray, labels: np.ndarray) -> float:
    preds = predict_batch(model, codes)
    return float((preds == labels).mean())


def train(model: Model, dataset, config: TrainConfig):
    """Run epochs x batches_per_epoch Adam steps over the training split.

    ``dataset`` is (codes [N,144] byte values, labels [N]); inputs are scaled
    to [0,1] here. Validation top-1 on the held-out split is logged after
    every epoch. Fully deterministic under config.seed.
    """
    codes, labels = dataset
    codes = np.asarray(codes)
    labels = np.asarray(labels, dtype=np.int64)
    if len(codes) != len(labels):
        raise ValueError(f"{len(codes)} examples but {len(labels)} labels")
    counts = np.bincount(labels, minlength=1)
    present = counts[counts > 0]
    if len(present) == 0 or present.min() < 2:
        raise ValueError("every class present in the dataset needs at least 2 examples")

    train_idx, eval_idx = split_encoded(codes, labels, config.eval_fraction, config.seed)
    x = (codes.astype(np.float64) / 255.0).astype(model.dtype)
    y = labels

    params = model.parameters()
    state = AdamState.for_params(params, learning_rate=config.learning_rate)
    rng = Prng(config.seed + _TRAIN_STREAM_OFFSET)
    log = TrainLog()
    step = 0
    for epoch in range(1, config.epochs + 1):
        for batch in make_batches(len(train_idx), config.batches_per_epoch, rng):
            idx = train_idx[batch]
            step += 1
            loss, grads = loss_and_grads(
                model, x[idx], y[idx], mode="train", rng=rng, l2_strength=config.l2_strength
            )
            if not np.isfinite(loss):
                raise NumericalFault(f"non-finite loss at step {step}")
            adam_step(params, grads, state)
            log.steps.append((step, float(loss)))
        if len(eval_idx):
            log.val_top1.append((epoch, _validation_accuracy(model, codes[eval_idx], y[eval_idx])))
    return model, log
