"""Flat key->tensor checkpoint container.

File layout: 8-byte little-endian header length, UTF-8 JSON header, then the
raw tensor payload as little-endian float64 in header declaration order.
The header carries entry names/shapes, a config hash, and free-form metadata.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import ValidationError

MAGIC_VERSION = 1


def save_checkpoint(path, tensors, config_hash, meta=None):
    """tensors: ordered mapping name -> ndarray (order fixes the payload layout)."""
    entries = [{"name": k, "shape": list(np.asarray(v).shape)} for k, v in tensors.items()]
    header = {
        "version": MAGIC_VERSION,
        "config_hash": config_hash,
        "entries": entries,
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for v in tensors.values():
            f.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (tensors dict, header dict)."""
    with open(path, "rb") as f:
        raw = f.read(8)
        if len(raw) != 8:
            raise ValidationError(f"truncated checkpoint {path}")
        (hlen,) = struct.unpack("<Q", raw)
        blob = f.read(hlen)
        if len(blob) != hlen:
            raise ValidationError(f"truncated checkpoint header in {path}")
        header = json.loads(blob.decode("utf-8"))
        if header.get("version") != MAGIC_VERSION:
            raise ValidationError(f"unsupported checkpoint version in {path}")
        tensors = {}
        for entry in header["entries"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(8 * count)
            if len(buf) != 8 * count:
                raise ValidationError(f"truncated checkpoint payload in {path}")
            tensors[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return tensors, header
