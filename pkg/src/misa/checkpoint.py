"""Binary checkpoints.

Layout (little-endian)::

    b"MISAv1"
    u32 config_length, config_length bytes of UTF-8 JSON (run configuration echo)
    u32 tensor_count
    per tensor: u16 name_length, name (UTF-8), u8 ndim, ndim x u32 shape, prod(shape) x f32 data
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"MISAv1"


class CheckpointError(ValueError):
    pass


def encode_checkpoint(params, config):
    chunks = [MAGIC]
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    chunks.append(struct.pack("<I", len(blob)))
    chunks.append(blob)
    chunks.append(struct.pack("<I", len(params)))
    for name, value in params.items():
        arr = np.ascontiguousarray(value, dtype="<f4")
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)) + raw)
        chunks.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def decode_checkpoint(data):
    if not data.startswith(MAGIC):
        raise CheckpointError("not a checkpoint (bad magic)")
    pos = len(MAGIC)

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise CheckpointError("checkpoint is truncated")
        out = struct.unpack_from(fmt, data, pos)
        pos += size
        return out

    (clen,) = take("<I")
    config = json.loads(data[pos: pos + clen].decode("utf-8"))
    pos += clen
    (count,) = take("<I")
    params = {}
    for _ in range(count):
        (nlen,) = take("<H")
        name = data[pos: pos + nlen].decode("utf-8")
        pos += nlen
        (ndim,) = take("<B")
        shape = take(f"<{ndim}I") if ndim else ()
        n = int(np.prod(shape)) if shape else 1
        if pos + 4 * n > len(data):
            raise CheckpointError(f"checkpoint is truncated inside tensor {name!r}")
        params[name] = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(shape).astype(np.float32)
        pos += 4 * n
    if pos != len(data):
        raise CheckpointError("trailing bytes after the last tensor")
    return config, params


def save_checkpoint(path, params, config):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(encode_checkpoint(params, config))
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
