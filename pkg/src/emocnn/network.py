"""Full model assembly: augmentation affine, conv/pool stack, FC head.

The input is a 144-byte dialogue encoding. An affine layer expands it to a
32x32x3 grid, five 5x5 convolutions (grouped per variant A-D) reduce it to
12x12x256 with size-preserving overlapping pools between groups, a final
2x2/stride-2 pool halves it to 6x6x256 = 9216, and three fully connected
layers with dropout produce the 5 class logits.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .labels import EmotionLabel, N_CLASSES
from .layers import (
    AffineParams,
    ConvParams,
    DropoutSpec,
    PoolSpec,
    affine_backward,
    affine_forward,
    conv2d_backward,
    conv2d_forward,
    dropout_backward,
    dropout_forward,
    maxpool_backward,
    maxpool_forward,
    relu,
    relu_backward,
    softmax,
    softmax_cross_entropy,
)
from .tensor import DEFAULT_DTYPE, Prng, gaussian_init, reshape
from .text import SEQUENCE_LENGTH

# Conv channel widths per group; each group is followed by one max pool.
CONV_GROUPS = {
    "A": ((32, 32), (64,), (128,), (256,)),
    "B": ((32,), (64, 64), (128,), (256,)),
    "C": ((32,), (64,), (128, 128), (256,)),
    "D": ((32,), (64,), (128,), (256, 256)),
}
VARIANTS = tuple(CONV_GROUPS)

FILTER_SIZE = 5
POOL_SAME = PoolSpec(window=5, stride=1, padding="same")
POOL_REDUCE = PoolSpec(window=2, stride=2, padding="none")
FLATTEN_WIDTH = 9216  # 6 * 6 * 256, the FC head's input width


def compute_augmentation_size(s_output: int, n_layers: int, s_filter: int, stride: int) -> int:
    """Square side the augmentation layer must produce so that ``n_layers``
    valid convolutions leave ``s_output``."""
    return s_output + n_layers * (s_filter - stride)


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture description. ``for_variant`` builds the canonical A-D
    shapes; direct construction permits small custom stacks for testing."""

    variant: Optional[str]
    conv_groups: tuple[tuple[int, ...], ...]
    input_len: int = SEQUENCE_LENGTH
    aug_side: int = 32
    aug_channels: int = 3
    filter_size: int = FILTER_SIZE
    fc_sizes: tuple[int, ...] = (1024, 1024, N_CLASSES)
    dropout_keep_input: float = 1.0
    dropout_keep_hidden: float = 0.3
    l2_strength: float = 1.5e-4
    init_mean: float = 0.0
    init_std: float = 0.01

    @classmethod
    def for_variant(cls, variant: str, **overrides) -> "NetworkConfig":
        variant = str(variant).upper()
        if variant not in CONV_GROUPS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
        return cls(variant=variant, conv_groups=CONV_GROUPS[variant], **overrides)

    @property
    def channel_plan(self) -> tuple[int, ...]:
        return tuple(ch for group in self.conv_groups for ch in group)

    @property
    def augmentation_out(self) -> int:
        return self.aug_side * self.aug_side * self.aug_channels

    @property
    def n_weighted_layers(self) -> int:
        return 1 + len(self.channel_plan) + len(self.fc_sizes)

    def spatial_trace(self) -> list[int]:
        """Spatial side after the augmentation reshape and after every
        conv and pool, in order. Raises if any layer underflows."""
        trace = [self.aug_side]
        side = self.aug_side
        for gi, group in enumerate(self.conv_groups):
            for ci in range(len(group)):
                if side < self.filter_size:
                    raise ValueError(
                        f"conv {gi + 1}.{ci + 1}: input side {side} smaller than "
                        f"{self.filter_size}x{self.filter_size} filter"
                    )
                side -= self.filter_size - 1
                trace.append(side)
            pool = POOL_REDUCE if gi == len(self.conv_groups) - 1 else POOL_SAME
            if pool.padding == "none":
                if side < pool.window:
                    raise ValueError(f"pool after group {gi + 1}: window {pool.window} larger than side {side}")
                side = (side - pool.window) // pool.stride + 1
            trace.append(side)
        return trace

    def flatten_width(self) -> int:
        return self.spatial_trace()[-1] ** 2 * self.channel_plan[-1]


def _pool_for_group(config: NetworkConfig, group_index: int) -> PoolSpec:
    return POOL_REDUCE if group_index == len(config.conv_groups) - 1 else POOL_SAME


@dataclass
class Model:
    """Parameter container for one built network."""

    config: NetworkConfig
    augmentation: AffineParams
    convs: list[ConvParams]
    fcs: list[AffineParams]

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        named = [("augmentation.W", self.augmentation.W), ("augmentation.b", self.augmentation.b)]
        for i, c in enumerate(self.convs, start=1):
            named.append((f"conv{i}.filters", c.filters))
            named.append((f"conv{i}.bias", c.bias))
        for i, fc in enumerate(self.fcs, start=1):
            named.append((f"fc{i}.W", fc.W))
            named.append((f"fc{i}.b", fc.b))
        return named

    def parameters(self) -> dict[str, np.ndarray]:
        return dict(self.named_parameters())

    def weight_names(self) -> list[str]:
        """Names of the L2-regularized tensors (weights/filters, not biases)."""
        return [name for name, _ in self.named_parameters() if not name.endswith(".b") and not name.endswith(".bias")]

    @property
    def dtype(self):
        return self.augmentation.W.dtype

    @property
    def n_parameters(self) -> int:
        return sum(p.size for _, p in self.named_parameters())


def _validate_config(config: NetworkConfig) -> None:
    trace = config.spatial_trace()  # raises on dimension underflow
    if config.variant is not None:
        if len(config.channel_plan) != 5:
            raise ValueError(f"variant {config.variant} must have 5 conv layers, got {len(config.channel_plan)}")
        if config.flatten_width() != FLATTEN_WIDTH:
            raise ValueError(
                f"variant {config.variant}: conv output flattens to {config.flatten_width()}, "
                f"expected {FLATTEN_WIDTH}"
            )
    if trace[-1] < 1:
        raise ValueError("network reduces spatial size below 1")


def allocate_model(config: NetworkConfig, dtype=DEFAULT_DTYPE) -> Model:
    """Model with zero-filled parameters (checkpoint loading, tests)."""
    _validate_config(config)
    aug = AffineParams(
        W=np.zeros((config.augmentation_out, config.input_len), dtype=dtype),
        b=np.zeros(config.augmentation_out, dtype=dtype),
    )
    convs = []
    in_ch = config.aug_channels
    for ch in config.channel_plan:
        convs.append(ConvParams(
            filters=np.zeros((ch, config.filter_size, config.filter_size, in_ch), dtype=dtype),
            bias=np.zeros(ch, dtype=dtype),
        ))
        in_ch = ch
    fcs = []
    in_dim = config.flatten_width()
    for out_dim in config.fc_sizes:
        fcs.append(AffineParams(W=np.zeros((out_dim, in_dim), dtype=dtype), b=np.zeros(out_dim, dtype=dtype)))
        in_dim = out_dim
    return Model(config=config, augmentation=aug, convs=convs, fcs=fcs)


def build_model(config: NetworkConfig, rng: Prng, dtype=DEFAULT_DTYPE) -> Model:
    """Gaussian-initialized model (weights N(mean, std), biases zero)."""
    model = allocate_model(config, dtype=dtype)
    mean, std = config.init_mean, config.init_std
    for name, param in model.named_parameters():
        if name.endswith(".b") or name.endswith(".bias"):
            continue
        param[...] = gaussian_init(param.shape, mean, std, rng, dtype=dtype)
    return model


def _run_forward(model: Model, batch: np.ndarray, mode: str, rng: Prng | None):
    cfg = model.config
    batch = np.asarray(batch)
    if batch.ndim != 2 or batch.shape[1] != cfg.input_len:
        raise ValueError(f"batch must be [B, {cfg.input_len}], got {batch.shape}")
    n = batch.shape[0]
    cache: dict = {"mode": mode}

    drop_in = DropoutSpec(cfg.dropout_keep_input)
    x, cache["mask_in"] = dropout_forward(batch, drop_in, mode, rng)
    cache["aug_in"] = x
    grid = reshape(affine_forward(x, model.augmentation), (n, cfg.aug_side, cfg.aug_side, cfg.aug_channels))

    h = grid
    conv_inputs, conv_pre, pool_inputs = [], [], []
    ci = 0
    for gi, group in enumerate(cfg.conv_groups):
        for _ in group:
            conv_inputs.append(h)
            z = conv2d_forward(h, model.convs[ci])
            conv_pre.append(z)
            h = relu(z)
            ci += 1
        pool_inputs.append(h)
        h = maxpool_forward(h, _pool_for_group(cfg, gi))
    cache["conv_inputs"] = conv_inputs
    cache["conv_pre"] = conv_pre
    cache["pool_inputs"] = pool_inputs
    cache["conv_out_shape"] = h.shape

    h = h.reshape(n, -1)
    drop_hidden = DropoutSpec(cfg.dropout_keep_hidden)
    fc_inputs, fc_pre, fc_masks = [], [], []
    for li, fc in enumerate(model.fcs):
        fc_inputs.append(h)
        z = affine_forward(h, fc)
        if li < len(model.fcs) - 1:
            fc_pre.append(z)
            a = relu(z)
            h, mask = dropout_forward(a, drop_hidden, mode, rng)
            fc_masks.append(mask)
        else:
            h = z
    cache["fc_inputs"] = fc_inputs
    cache["fc_pre"] = fc_pre
    cache["fc_masks"] = fc_masks
    return h, cache


def forward(model: Model, batch: np.ndarray, mode: str = "test", rng: Prng | None = None) -> np.ndarray:
    """Logits [B, 5] for a batch of inputs already scaled to [0, 1]."""
    logits, _ = _run_forward(model, batch, mode, rng)
    return logits


def _run_backward(model: Model, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    cfg = model.config
    grads: dict[str, np.ndarray] = {}
    drop_hidden = DropoutSpec(cfg.dropout_keep_hidden)
    # Forward-time dropout is the identity in test mode (and for keep=1);
    # the backward pass must mirror that branch exactly.
    dropout_active = cache["mode"] == "train" and cfg.dropout_keep_hidden < 1.0

    g = dlogits
    for li in range(len(model.fcs) - 1, -1, -1):
        if li < len(model.fcs) - 1:
            if dropout_active:
                g = dropout_backward(g, cache["fc_masks"][li], drop_hidden)
            g = relu_backward(g, cache["fc_pre"][li])
        g, dw, db = affine_backward(g, cache["fc_inputs"][li], model.fcs[li])
        grads[f"fc{li + 1}.W"] = dw
        grads[f"fc{li + 1}.b"] = db

    g = g.reshape(cache["conv_out_shape"])
    ci = len(model.convs)
    for gi in range(len(cfg.conv_groups) - 1, -1, -1):
        g = maxpool_backward(g, cache["pool_inputs"][gi], _pool_for_group(cfg, gi))
        for _ in reversed(cfg.conv_groups[gi]):
            ci -= 1
            g = relu_backward(g, cache["conv_pre"][ci])
            g, df, db = conv2d_backward(g, cache["conv_inputs"][ci], model.convs[ci])
            grads[f"conv{ci + 1}.filters"] = df
            grads[f"conv{ci + 1}.bias"] = db

    g = g.reshape(g.shape[0], -1)
    _, dw, db = affine_backward(g, cache["aug_in"], model.augmentation)
    grads["augmentation.W"] = dw
    grads["augmentation.b"] = db
    return grads


def loss_and_grads(
    model: Model,
    batch: np.ndarray,
    labels: np.ndarray,
    mode: str = "train",
    rng: Prng | None = None,
    l2_strength: float | None = None,
):
    """Softmax cross-entropy plus L2 penalty, with gradients for every
    parameter. The L2 term is l2 * sum(W^2) over weights and filters only;
    its gradient contribution is 2 * l2 * W."""
    l2 = model.config.l2_strength if l2_strength is None else l2_strength
    logits, cache = _run_forward(model, batch, mode, rng)
    loss, _, dlogits = softmax_cross_entropy(logits, np.asarray(labels))
    grads = _run_backward(model, cache, dlogits)
    if l2 != 0.0:
        params = model.parameters()
        for name in model.weight_names():
            w = params[name]
            loss += l2 * float(np.vdot(w, w))
            grads[name] += (2.0 * l2) * w
    return loss, grads


def predict(model: Model, seq) -> tuple[EmotionLabel, np.ndarray]:
    """Classify one 144-byte sequence. Ties resolve to the lowest index."""
    codes = np.asarray(seq, dtype=np.float64)
    if codes.shape != (model.config.input_len,):
        raise ValueError(f"sequence must have shape ({model.config.input_len},), got {codes.shape}")
    x = (codes / 255.0).astype(model.dtype).reshape(1, -1)
    probs = softmax(forward(model, x, mode="test"))[0]
    return EmotionLabel(int(np.argmax(probs))), probs


def predict_batch(model: Model, codes: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Predicted class indices for raw byte codes [N, 144], in chunks."""
    codes = np.asarray(codes)
    x = (codes.astype(np.float64) / 255.0).astype(model.dtype)
    out = np.empty(len(x), dtype=np.int64)
    for start in range(0, len(x), batch_size):
        logits = forward(model, x[start : start + batch_size], mode="test")
        out[start : start + batch_size] = logits.argmax(axis=1)
    return out


def config_to_dict(config: NetworkConfig) -> dict:
    d = asdict(config)
    d["conv_groups"] = [list(g) for g in config.conv_groups]
    d["fc_sizes"] = list(config.fc_sizes)
    return d


def config_from_dict(d: dict) -> NetworkConfig:
    d = dict(d)
    d["conv_groups"] = tuple(tuple(int(c) for c in g) for g in d["conv_groups"])
    d["fc_sizes"] = tuple(int(s) for s in d["fc_sizes"])
    return NetworkConfig(**d)
