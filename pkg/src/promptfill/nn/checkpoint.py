"""Binary model checkpoint format.

Layout: magic "P2M2", format version u32, length-prefixed config JSON,
then per parameter (lexicographic name order): u32 name length, UTF-8
name, u32 rank, u32 dims, little-endian float32 data. The config blob
carries its own fingerprint so corruption and architecture mismatches
are detected on load.
"""
from __future__ import annotations

import hashlib
import json
import struct
from collections import OrderedDict

import numpy as np

MAGIC = b"P2M2"
VERSION = 1


class CheckpointError(ValueError):
    pass


def config_fingerprint(config: dict) -> str:
    clean = {k: v for k, v in config.items() if k != "fingerprint"}
    blob = json.dumps(clean, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path, config: dict, arrays: dict) -> None:
    """Write config + named float32 arrays (ParamStore.arrays() shape)."""
    config = dict(config)
    config["fingerprint"] = config_fingerprint(config)
    blob = json.dumps(config, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name in sorted(arrays):
            arr = np.ascontiguousarray(arrays[name], dtype="<f4")
            encoded = name.encode()
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<I", dim))
            f.write(arr.tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path):
    """Read (config, OrderedDict name -> float32 array); validates
    magic, version, lengths and the embedded config fingerprint."""
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != MAGIC:
            raise CheckpointError("bad magic: not a model checkpoint")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (blob_len,) = struct.unpack("<I", _read_exact(f, 4, "config length"))
        try:
            config = json.loads(_read_exact(f, blob_len, "config").decode())
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise CheckpointError(f"corrupt config blob: {e}") from None
        if config.get("fingerprint") != config_fingerprint(config):
            raise CheckpointError("config fingerprint mismatch (corrupt or edited)")
        arrays: OrderedDict[str, np.ndarray] = OrderedDict()
        prev = None
        while True:
            head = f.read(4)
            if not head:
                break
            if len(head) != 4:
                raise CheckpointError("truncated checkpoint while reading name length")
            (name_len,) = struct.unpack("<I", head)
            name = _read_exact(f, name_len, "name").decode()
            if prev is not None and name <= prev:
                raise CheckpointError("parameter names out of order")
            prev = name
            (rank,) = struct.unpack("<I", _read_exact(f, 4, "rank"))
            dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank, "dims"))
            count = int(np.prod(dims)) if rank else 1
            raw = _read_exact(f, 4 * count, f"data for {name!r}")
            arrays[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
    return config, arrays
