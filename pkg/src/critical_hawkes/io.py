"""CSV, JSON and binary columnar output, and run manifests.

Binary columnar layout (all integers little-endian)::

    offset  size  content
    0       4     magic b"CHWK"
    4       2     format version (uint16, currently 1)
    6       2     number of columns C (uint16)
    8       8     number of rows R (uint64)
    16      ...   C names, each a uint16 byte length then UTF-8 bytes
    ...     8*R*C column-major float64 data, column 0 first

Floats in CSV and JSON are written with ``repr`` so that identical inputs
give byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CHWK"
VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns: dict) -> Path:
    """Write equal-length columns with a header row."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = arrays[0].shape[0] if arrays else 0
    if any(a.shape[0] != n for a in arrays):
        raise ValueError("all CSV columns must have the same length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> dict:
    lines = Path(path).read_text().splitlines()
    names = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(names))
    return {k: data[:, j] for j, k in enumerate(names)}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def write_columnar(path, columns: dict) -> Path:
    """Write columns in the binary layout described in the module docstring."""
    path = Path(path)
    names = list(columns)
    arrays = [np.ascontiguousarray(columns[k], dtype="<f8") for k in names]
    rows = arrays[0].size if arrays else 0
    if any(a.size != rows for a in arrays):
        raise ValueError("all columns must have the same length")
    with path.open("wb") as fh:
        fh.write(MAGIC + struct.pack("<HHQ", VERSION, len(names), rows))
        for k in names:
            b = k.encode("utf-8")
            fh.write(struct.pack("<H", len(b)) + b)
        for a in arrays:
            fh.write(a.tobytes())
    return path


def read_columnar(path) -> dict:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError("not a columnar dump (bad magic)")
    version, ncol, rows = struct.unpack_from("<HHQ", raw, 4)
    if version != VERSION:
        raise ValueError(f"unsupported columnar dump version {version}")
    pos = 16
    names = []
    for _ in range(ncol):
        (ln,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        names.append(raw[pos:pos + ln].decode("utf-8"))
        pos += ln
    out = {}
    for k in names:
        out[k] = np.frombuffer(raw, dtype="<f8", count=rows, offset=pos).copy()
        pos += 8 * rows
    return out


def config_hash(config: dict) -> str:
    blob = json.dumps(_clean(config), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def manifest(config: dict, constants=None, files=(), extra: dict | None = None) -> dict:
    from . import __version__
    from ._accel import backend

    out = {
        "config_sha256": config_hash(config),
        "code_version": __version__,
        "backend": backend(),
        "files": sorted(str(Path(f).name) for f in files),
    }
    if constants is not None:
        out["constants"] = constants.to_dict() if hasattr(constants, "to_dict") else constants
    if extra:
        out.update(extra)
    return out
