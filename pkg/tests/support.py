"""Shared test oracles and synthetic data generators."""
from __future__ import annotations

import numpy as np

from emocnn import NetworkConfig, Prng, build_model, encode_dialogue
from emocnn.text import SEQUENCE_LENGTH


def rel_error(a, b) -> float:
    """Max absolute difference over the larger of the two max magnitudes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-8)
    return float(np.abs(a - b).max(initial=0.0) / scale)


def numeric_gradient(f, x, h=1e-5):
    """Central finite differences of scalar f() with respect to x, in place.

    f must read the current contents of x; x is restored after probing.
    """
    x = np.asarray(x)
    grad = np.zeros(x.shape, dtype=np.float64)
    flat_x = x.ravel()
    flat_g = grad.ravel()
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + h
        fp = f()
        flat_x[i] = orig - h
        fm = f()
        flat_x[i] = orig
        flat_g[i] = (fp - fm) / (2.0 * h)
    return grad


def distinct_values(shape, seed, low=-1.0, high=1.0):
    """float64 tensor of pairwise-distinct values with gaps >> FD step size.

    Built from a permutation so max pooling has no ties and no two values sit
    closer than (high-low)/size.
    """
    rng = np.random.default_rng(seed)
    size = int(np.prod(shape))
    levels = low + (high - low) * (rng.permutation(size) + 0.5) / size
    return levels.reshape(shape)


def away_from_zero(shape, seed, margin=0.05):
    """Random float64 values with |x| >= margin (safe for ReLU FD probes)."""
    rng = np.random.default_rng(seed)
    mag = margin + rng.random(shape)
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return mag * sign


def conv2d_naive(x, filters, bias):
    """Reference valid cross-correlation: explicit loops, no vectorization."""
    batch, h, w, c = x.shape
    k, fh, fw, _ = filters.shape
    oh, ow = h - fh + 1, w - fw + 1
    out = np.zeros((batch, oh, ow, k), dtype=np.float64)
    for b in range(batch):
        for i in range(oh):
            for j in range(ow):
                for f in range(k):
                    acc = 0.0
                    for di in range(fh):
                        for dj in range(fw):
                            for ch in range(c):
                                acc += x[b, i + di, j + dj, ch] * filters[f, di, dj, ch]
                    out[b, i, j, f] = acc + bias[f]
    return out


def tiny_config(**overrides) -> NetworkConfig:
    """Smallest full-pipeline config: 5 -> 6x6x2 -> conv3 -> pool -> 3 -> 4 -> 5."""
    base = dict(
        variant=None,
        conv_groups=((3,),),
        input_len=5,
        aug_side=6,
        aug_channels=2,
        fc_sizes=(4, 5),
        l2_strength=1e-3,
    )
    base.update(overrides)
    return NetworkConfig(**base)


def randomized_tiny_model(seed, dtype=np.float64, **config_overrides):
    """Tiny model with O(1) parameters so pre-activations avoid ReLU kinks."""
    model = build_model(tiny_config(**config_overrides), Prng(seed), dtype=dtype)
    rng = Prng(seed + 1)
    for _, p in model.named_parameters():
        p[...] = (rng.uniform(p.size).reshape(p.shape) - 0.5).astype(dtype)
    return model


# Marker characters per class, chosen so their byte codes (40..200) are far
# apart after scaling; fillers encode to small codes (5..24) that never
# collide with a marker code.
MARKER_CHARS = tuple(chr(0x4E00 + o) for o in (40, 80, 120, 160, 200))
FILLER_CHARS = tuple(chr(0x4E00 + o) for o in range(5, 25))


def make_marker_texts(n, seed, n_classes=5):
    """Synthetic dialogues whose class is determined by a marker character.

    Each text is ~100 copies of its class marker at random positions among
    random filler, so the mapping is learnable and generalizes across draws.
    """
    rng = np.random.default_rng(seed)
    texts, labels = [], []
    for i in range(n):
        label = i % n_classes
        n_marker = int(rng.integers(95, 106))
        chars = [MARKER_CHARS[label]] * n_marker
        chars += [FILLER_CHARS[int(rng.integers(len(FILLER_CHARS)))] for _ in range(SEQUENCE_LENGTH - n_marker)]
        perm = rng.permutation(len(chars))
        texts.append("".join(chars[j] for j in perm))
        labels.append(label)
    return texts, labels


def make_marker_dataset(n, seed, n_classes=5):
    """Encoded (codes [n,144] uint8, labels [n] int64) marker dataset."""
    texts, labels = make_marker_texts(n, seed, n_classes)
    codes = np.stack([encode_dialogue(t) for t in texts])
    return codes, np.asarray(labels, dtype=np.int64)


def write_marker_tsv(path, n, seed, n_classes=5):
    from emocnn.labels import LABEL_NAMES

    texts, labels = make_marker_texts(n, seed, n_classes)
    with open(path, "w", encoding="utf-8") as fh:
        for text, label in zip(texts, labels):
            fh.write(f"{LABEL_NAMES[label]}\t{text}\n")
    return path
