"""Binary model checkpoints.

File layout, all integers little-endian:

    bytes 0..3   magic ``EMON``
    bytes 4..5   format version (u16)
    bytes 6..9   metadata length in bytes (u32)
    metadata     UTF-8 JSON: network config, label order, and a tensor
                 directory of (name, rank, dims, offset) entries
    data         raw float32 tensor values in directory order; offsets in
                 the directory are relative to the start of this section

The JSON is serialized with sorted keys and fixed separators, so saving the
same parameters always produces byte-identical files.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .labels import LABEL_NAMES
from .network import Model, allocate_model, config_from_dict, config_to_dict

MAGIC = b"EMON"
VERSION = 1

_HEADER = struct.Struct("<4sHI")


class CheckpointError(Exception):
    """Unreadable or inconsistent checkpoint file."""


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


class CheckpointConfigError(CheckpointError):
    pass


def save_checkpoint(model: Model, path) -> None:
    """Write the model's parameters as float32, bit-exactly recoverable."""
    directory = []
    blobs = []
    offset = 0
    for name, param in model.named_parameters():
        data = np.ascontiguousarray(param, dtype="<f4").tobytes()
        directory.append({
            "name": name,
            "rank": param.ndim,
            "dims": list(param.shape),
            "offset": offset,
        })
        blobs.append(data)
        offset += len(data)
    meta = {
        "config": config_to_dict(model.config),
        "labels": list(LABEL_NAMES),
        "tensors": directory,
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(meta_bytes)))
        fh.write(meta_bytes)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path, expect_variant: str | None = None) -> Model:
    """Rebuild a model from a checkpoint, validating version, config, and
    every tensor's shape. Parameters load as float32."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CheckpointTruncatedError(f"{path}: file shorter than header")
    magic, version, meta_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, expected {VERSION}")
    meta_end = _HEADER.size + meta_len
    if len(raw) < meta_end:
        raise CheckpointTruncatedError(f"{path}: metadata truncated")
    try:
        meta = json.loads(raw[_HEADER.size : meta_end].decode("utf-8"))
        config = config_from_dict(meta["config"])
        labels = meta["labels"]
        directory = meta["tensors"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: unreadable metadata: {exc}") from None
    if tuple(labels) != LABEL_NAMES:
        raise CheckpointConfigError(f"{path}: label order {labels} does not match {list(LABEL_NAMES)}")
    if expect_variant is not None and config.variant != expect_variant:
        raise CheckpointConfigError(
            f"{path}: checkpoint is variant {config.variant}, expected {expect_variant}"
        )

    model = allocate_model(config, dtype=np.float32)
    params = model.parameters()
    seen = set()
    data = raw[meta_end:]
    for entry in directory:
        name = entry["name"]
        if name not in params:
            raise CheckpointShapeError(f"{path}: unknown tensor {name!r}")
        param = params[name]
        dims = tuple(int(d) for d in entry["dims"])
        if dims != param.shape or int(entry["rank"]) != param.ndim:
            raise CheckpointShapeError(
                f"{path}: tensor {name!r} has dims {dims}, model expects {param.shape}"
            )
        start = int(entry["offset"])
        nbytes = param.size * 4
        if start < 0 or start + nbytes > len(data):
            raise CheckpointTruncatedError(f"{path}: tensor {name!r} data out of bounds")
        param[...] = np.frombuffer(data[start : start + nbytes], dtype="<f4").reshape(dims)
        seen.add(name)
    missing = set(params) - seen
    if missing:
        raise CheckpointShapeError(f"{path}: missing tensors: {sorted(missing)}")
    return model
