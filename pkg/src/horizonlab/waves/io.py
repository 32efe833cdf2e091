"""Flat binary snapshot format: one JSON header line, then little-endian float64.

Layout: ``HLSNAP1\\n`` + header JSON (utf-8, one line, ``\\n`` terminated) +
raw data in C order. The header records ``shape``, ``axes`` and free-form
metadata.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

MAGIC = b"HLSNAP1\n"


def write_snapshot(path, data, axes=None, meta=None):
    data = np.ascontiguousarray(data, dtype="<f8")
    header = {"shape": list(data.shape), "dtype": "<f8", "axes": {}, "meta": meta or {}}
    for name, arr in (axes or {}).items():
        header["axes"][name] = [float(x) for x in np.asarray(arr).ravel()]
    blob = MAGIC + json.dumps(header, sort_keys=True).encode() + b"\n" + data.tobytes()
    atomic_write_bytes(path, blob)


def read_snapshot(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(MAGIC):
        raise ValueError(f"{path}: not a snapshot file")
    end = raw.index(b"\n", len(MAGIC))
    header = json.loads(raw[len(MAGIC):end])
    data = np.frombuffer(raw[end + 1:], dtype="<f8").reshape(header["shape"])
    axes = {k: np.array(v) for k, v in header["axes"].items()}
    return data, axes, header["meta"]


def atomic_write_bytes(path, blob: bytes):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode())
