"""Parameter blob serialization.

Layout (all integers little-endian):

    bytes 0..3   magic b"MCAV"
    byte  4      format version (1)
    bytes 5..8   uint32 header length H
    bytes 9..9+H UTF-8 JSON header, sorted keys:
                   {"entries": [{"name", "shape", "kind"?}...],
                    "dtype": "float64"|"float32",
                    "meta": {...}}
    remainder    raw array payloads, concatenated in entry order,
                 C-contiguous, little-endian

The header's "meta" carries free-form provenance (seed, layer kinds, config
hash). Readers must verify magic and version.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ArtifactError

MAGIC = b"MCAV"
VERSION = 1

_DTYPES = {"float64": "<f8", "float32": "<f4"}


def save_blob(path, named_arrays, meta=None, dtype="float64"):
    """Write [(name, ndarray), ...] to `path` in the documented layout."""
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported dtype {dtype}")
    np_dtype = np.dtype(_DTYPES[dtype])
    entries = []
    payload = bytearray()
    for name, arr in named_arrays:
        arr = np.ascontiguousarray(arr, dtype=np_dtype)
        entries.append({"name": name, "shape": list(arr.shape)})
        payload.extend(arr.tobytes())
    header = json.dumps({"entries": entries, "dtype": dtype, "meta": meta or {}},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<B", VERSION))
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(bytes(payload))


def load_blob(path, cast=np.float64):
    """Read a blob; returns (dict name -> ndarray, meta dict).

    Arrays are cast to `cast` (float64 default); pass cast=None to keep the
    stored dtype.
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing parameter blob: {path}")
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise ArtifactError(f"{path}: bad magic {raw[:4]!r}")
    version = raw[4]
    if version != VERSION:
        raise ArtifactError(f"{path}: unsupported format version {version}")
    hlen = struct.unpack("<I", raw[5:9])[0]
    header = json.loads(raw[9:9 + hlen].decode("utf-8"))
    np_dtype = np.dtype(_DTYPES[header["dtype"]])
    out = {}
    offset = 9 + hlen
    for entry in header["entries"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * np_dtype.itemsize
        arr = np.frombuffer(raw, dtype=np_dtype, count=count, offset=offset).reshape(shape)
        out[entry["name"]] = arr if cast is None else arr.astype(cast)
        offset += nbytes
    if offset != len(raw):
        raise ArtifactError(f"{path}: trailing bytes ({len(raw) - offset})")
    return out, header["meta"]
