"""SPMD checkpoint files: magic, JSON config block, named float64 tensor table."""
from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import CheckpointError

MAGIC = b"SPMD"
VERSION = 1


def pack_tensors(magic: bytes, config: dict, tensors: dict) -> bytes:
    cfg = json.dumps(config, sort_keys=True).encode("utf-8")
    parts = [struct.pack("<4sBI", magic, VERSION, len(cfg)), cfg, struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.astype("<f8").tobytes())
    return b"".join(parts)


def unpack_tensors(magic: bytes, buf: bytes):
    mv = memoryview(buf)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(mv):
            raise CheckpointError("checkpoint truncated")
        out = mv[pos:pos + n]
        pos += n
        return out

    got, version, cfg_len = struct.unpack("<4sBI", take(9))
    if got != magic:
        raise CheckpointError(f"expected magic {magic!r}, got {got!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    config = json.loads(bytes(take(cfg_len)).decode("utf-8"))
    (count,) = struct.unpack("<I", take(4))
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape, dtype=np.int64))
        tensors[name] = np.frombuffer(take(8 * size), dtype="<f8").reshape(shape).copy()
    if pos != len(mv):
        raise CheckpointError("trailing bytes in checkpoint")
    return config, tensors


def save_network(net, extra: dict | None = None) -> bytes:
    from dataclasses import asdict

    config = {"kind": net.kind, "model": asdict(net.config), "dtype": str(net.dtype)}
    config.update(extra or {})
    return pack_tensors(MAGIC, config, net.tensors())


def load_network(buf: bytes):
    """Rebuild a network from checkpoint bytes; returns ``(network, config dict)``."""
    from .models import LSTMClassifier, LSTMFCNClassifier, LstmConfig, LstmFcnConfig

    config, tensors = unpack_tensors(MAGIC, buf)
    dtype = np.dtype(config.get("dtype", "float64"))
    tensors = {k: v.astype(dtype) for k, v in tensors.items()}
    kind = config.get("kind")
    if kind == "lstm":
        net = LSTMClassifier(LstmConfig(**config["model"]), params=tensors)
    elif kind == "lstm-fcn":
        mc = LstmFcnConfig(**config["model"])
        buffers = {k: tensors.pop(k) for k in list(tensors) if ".running_" in k}
        net = LSTMFCNClassifier(mc, params=tensors, buffers=buffers)
    else:
        raise CheckpointError(f"unknown model kind {kind!r}")
    return net, config
