"""Reader for the exporter's tensor interchange format.

Independent implementation of the documented layout (the harness never
imports the exporter): magic "LOBT", version u16 = 1, dtype u16 = 1
(float32 LE), rank u16, pad u16, rank x u32 dims, row-major payload.
The JSON sidecar lives at <path>.json.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

_HEADER = struct.Struct("<4sHHHH")


class CorruptTensor(Exception):
    pass


class IncompatibleScheme(Exception):
    pass


def read_tensor(path):
    """(float32 array, sidecar dict). Raises CorruptTensor on any mismatch."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise CorruptTensor("file too short for header")
    magic, version, dtype, rank, _ = _HEADER.unpack_from(buf, 0)
    if magic != b"LOBT":
        raise CorruptTensor(f"bad magic {magic!r}")
    if version != 1 or dtype != 1:
        raise CorruptTensor(f"unsupported version/dtype {version}/{dtype}")
    pos = _HEADER.size
    if len(buf) < pos + 4 * rank:
        raise CorruptTensor("file too short for dims")
    dims = struct.unpack_from(f"<{rank}I", buf, pos)
    pos += 4 * rank
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    if len(buf) != pos + 4 * count:
        raise CorruptTensor(f"payload length {len(buf) - pos}, expected {4 * count}")
    array = np.frombuffer(buf[pos:], dtype="<f4").reshape(dims).copy()
    meta = {}
    sidecar = f"{path}.json"
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            meta = json.load(fh)
    return array, meta


def load_xy(x_path, y_path=None):
    """Feature tensor plus labels; the label path defaults to the sidecar ref."""
    x, meta = read_tensor(x_path)
    if y_path is None:
        ref = meta.get("labels")
        if ref is None:
            raise CorruptTensor(f"{x_path}: sidecar carries no label reference")
        y_path = os.path.join(os.path.dirname(os.path.abspath(x_path)), ref)
    y, _ = read_tensor(y_path)
    if len(y) != len(x):
        raise CorruptTensor(f"{len(x)} inputs vs {len(y)} labels")
    return x, y.astype(np.int64), meta
