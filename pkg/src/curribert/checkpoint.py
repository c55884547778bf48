"""Single-file checkpoint format: length-prefixed JSON manifest + raw f32 payload.

Layout: 8-byte little-endian unsigned manifest length, the UTF-8 JSON manifest,
then every parameter buffer concatenated little-endian f32 in manifest index
order. The manifest JSON is serialized with sorted keys and no whitespace, so
save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .model import Model, ModelConfig, parameter_shapes

FORMAT_VERSION = 1
_LEN_PREFIX = struct.Struct("<Q")


def save_checkpoint(model: Model, vocab_hash: str, path: str | Path) -> None:
    """Write config, vocab hash, and all parameters to one file."""
    if model.config.precision != "f32":
        raise ValueError("checkpoint payload is f32; refusing to downcast f64 parameters")
    shapes = parameter_shapes(model.config)
    missing = shapes.keys() - model.params.keys()
    extra = model.params.keys() - shapes.keys()
    if missing or extra:
        raise ValueError(f"parameter set mismatch: missing {sorted(missing)}, extra {sorted(extra)}")

    index = []
    buffers = []
    offset = 0
    for name, shape in shapes.items():
        t = model.params[name]
        if t.shape != shape:
            raise ValueError(f"tensor {name} has shape {t.shape}, expected {shape}")
        buf = np.ascontiguousarray(t.data, dtype="<f4").tobytes()
        index.append({"name": name, "shape": list(shape), "dtype": "f32", "byte_offset": offset})
        buffers.append(buf)
        offset += len(buf)

    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": model.config.to_dict(),
        "vocab_hash": vocab_hash,
        "tensors": index,
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_LEN_PREFIX.pack(len(manifest_bytes)))
        f.write(manifest_bytes)
        for buf in buffers:
            f.write(buf)


def load_checkpoint(path: str | Path) -> tuple[Model, str]:
    """Read a checkpoint; returns the model and the vocab hash it was trained with."""
    raw = Path(path).read_bytes()
    if len(raw) < _LEN_PREFIX.size:
        raise ValueError("checkpoint file too short for manifest length prefix")
    (mlen,) = _LEN_PREFIX.unpack_from(raw, 0)
    header_end = _LEN_PREFIX.size + mlen
    if len(raw) < header_end:
        raise ValueError("checkpoint file truncated inside manifest")
    try:
        manifest = json.loads(raw[_LEN_PREFIX.size : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"malformed checkpoint manifest: {e}") from e

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r}")
    config = ModelConfig(**manifest["model_config"])
    vocab_hash = manifest["vocab_hash"]
    shapes = parameter_shapes(config)

    payload = raw[header_end:]
    expected_names = list(shapes.keys())
    entries = manifest["tensors"]
    seen = [e["name"] for e in entries]
    for name in seen:
        if name not in shapes:
            raise ValueError(f"unknown tensor name in manifest: {name}")
    if seen != expected_names:
        raise ValueError("manifest tensor index does not cover the parameter set in order")

    params: dict[str, Tensor] = {}
    offset = 0
    for entry in entries:
        name = entry["name"]
        shape = tuple(entry["shape"])
        if shape != shapes[name]:
            raise ValueError(f"tensor {name} has manifest shape {shape}, expected {shapes[name]}")
        if entry["dtype"] != "f32":
            raise ValueError(f"tensor {name} has unsupported dtype {entry['dtype']!r}")
        if entry["byte_offset"] != offset:
            raise ValueError(f"tensor {name} byte_offset {entry['byte_offset']} not contiguous")
        nbytes = int(np.prod(shape, dtype=np.int64)) * 4 if shape else 4
        if offset + nbytes > len(payload):
            raise ValueError("payload length mismatch")
        data = np.frombuffer(payload, dtype="<f4", count=nbytes // 4, offset=offset)
        params[name] = ad.parameter(data.reshape(shape).copy(), dtype=np.float32)
        offset += nbytes
    if offset != len(payload):
        raise ValueError("payload length mismatch")
    return Model(config=config, params=params), vocab_hash
