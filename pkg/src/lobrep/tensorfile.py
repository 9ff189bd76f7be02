"""Binary tensor interchange format plus JSON sidecar.

Layout (little-endian):
    magic   4 bytes  b"LOBT"
    version u16      1
    dtype   u16      1 = float32
    rank    u16
    pad     u16      0
    dims    rank x u32
    payload product(dims) x 4 bytes, row-major float32

The sidecar lives at ``<path>.json`` and carries scheme metadata, an
optional label-file reference and a split tag. Model checkpoints reuse the
same record format: b"LOBM", a JSON header, then one LOBT record per
parameter tensor.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .errors import CorruptTensor

MAGIC = b"LOBT"
MODEL_MAGIC = b"LOBM"
VERSION = 1
DTYPE_F32 = 1
_HEADER = struct.Struct("<4sHHHH")


def _encode(array: np.ndarray) -> bytes:
    data = np.ascontiguousarray(array, dtype="<f4")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, data.ndim, 0)
    dims = struct.pack(f"<{data.ndim}I", *data.shape)
    return header + dims + data.tobytes()


def _decode(buf: bytes, offset: int = 0):
    if len(buf) - offset < _HEADER.size:
        raise CorruptTensor("file too short for header")
    magic, version, dtype, rank, _ = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise CorruptTensor(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptTensor(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise CorruptTensor(f"unsupported dtype code {dtype}")
    pos = offset + _HEADER.size
    if len(buf) - pos < 4 * rank:
        raise CorruptTensor("file too short for dims")
    dims = struct.unpack_from(f"<{rank}I", buf, pos)
    pos += 4 * rank
    count = 1
    for d in dims:
        count *= d
    nbytes = 4 * count
    if len(buf) - pos < nbytes:
        raise CorruptTensor(
            f"payload truncated: need {nbytes} bytes, have {len(buf) - pos}"
        )
    array = np.frombuffer(buf[pos : pos + nbytes], dtype="<f4").reshape(dims)
    return array.copy(), pos + nbytes


def _atomic_write_bytes(path, payload: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def sidecar_path(path) -> str:
    return f"{path}.json"


def write_tensor(path, array: np.ndarray, meta: dict | None = None) -> None:
    _atomic_write_bytes(path, _encode(array))
    if meta is not None:
        _atomic_write_bytes(
            sidecar_path(path), (json.dumps(meta, sort_keys=True, indent=2) + "\n").encode()
        )


def read_tensor(path, check_refs: bool = True):
    """(array, meta). Referenced files named in the sidecar must resolve."""
    with open(path, "rb") as fh:
        buf = fh.read()
    array, end = _decode(buf)
    if end != len(buf):
        raise CorruptTensor(f"{len(buf) - end} trailing bytes")
    meta = {}
    sp = sidecar_path(path)
    if os.path.exists(sp):
        with open(sp) as fh:
            meta = json.load(fh)
        if check_refs:
            for key in ("labels", "series"):
                ref = meta.get(key)
                if ref is not None:
                    resolved = os.path.join(os.path.dirname(os.path.abspath(path)), ref)
                    if not os.path.exists(resolved):
                        raise CorruptTensor(f"sidecar reference {key}={ref!r} not found")
    return array, meta


def write_model(path, header: dict, params: dict[str, np.ndarray]) -> None:
    """Checkpoint: JSON header naming the parameter order, then LOBT records."""
    names = list(params)
    header = dict(header, params=names)
    header_bytes = json.dumps(header, sort_keys=True).encode()
    chunks = [MODEL_MAGIC, struct.pack("<I", len(header_bytes)), header_bytes]
    for name in names:
        chunks.append(_encode(params[name]))
    _atomic_write_bytes(path, b"".join(chunks))


def read_model(path):
    """(header, params) from a checkpoint file."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != MODEL_MAGIC:
        raise CorruptTensor(f"bad model magic {buf[:4]!r}")
    (hlen,) = struct.unpack_from("<I", buf, 4)
    try:
        header = json.loads(buf[8 : 8 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptTensor(f"bad model header: {exc}") from None
    pos = 8 + hlen
    params = {}
    for name in header["params"]:
        array, pos = _decode(buf, pos)
        params[name] = array
    if pos != len(buf):
        raise CorruptTensor(f"{len(buf) - pos} trailing bytes")
    return header, params
