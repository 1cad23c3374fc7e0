"""Writer for the tensor bundle format read by the C++ side.

Layout, little-endian:
  b"CXRGTB01" | u64 metadata length | metadata JSON | u64 tensor count |
  per tensor: u32 name length | name | u8 dtype (0 float32, 1 int64) | u32 rank | i64 dims | data
"""

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CXRGTB01"


def write_bundle(path, tensors, metadata=None):
    """Writes {name: array} to `path`. Integer arrays are stored as int64, the rest as float32."""
    meta = json.dumps(metadata or {}).encode("utf-8")
    out = bytearray(MAGIC)
    out += struct.pack("<Q", len(meta)) + meta
    out += struct.pack("<Q", len(tensors))
    for name, value in tensors.items():
        arr = np.asarray(value)
        if np.issubdtype(arr.dtype, np.integer) or arr.dtype == np.bool_:
            code, arr = 1, arr.astype("<i8")
        else:
            code, arr = 0, arr.astype("<f4")
        key = name.encode("utf-8")
        out += struct.pack("<I", len(key)) + key
        out += struct.pack("<BI", code, arr.ndim)
        out += struct.pack(f"<{arr.ndim}q", *arr.shape)
        out += np.ascontiguousarray(arr).tobytes()
    Path(path).write_bytes(bytes(out))


def export_state_dict(module, path, metadata=None):
    """Saves a torch module's state_dict (parameters and buffers) as a bundle."""
    tensors = {k: v.detach().cpu().numpy() for k, v in module.state_dict().items()}
    write_bundle(path, tensors, metadata)
