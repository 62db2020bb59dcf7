"""Deterministic, crash-safe artifact files and the run manifest."""
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .. import __version__


def atomic_write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v):
    if isinstance(v, (str, bool)) or v is None:
        return str(v)
    v = float(v)
    return repr(v) if np.isfinite(v) else str(v)


def csv_bytes(columns):
    """Columns dict (equal-length 1D sequences) -> CSV bytes with full float precision."""
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("all CSV columns must have the same length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    return ("\n".join(lines) + "\n").encode()


def write_csv(path, columns):
    return atomic_write_bytes(path, csv_bytes(columns))


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = np.array(vals)
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_json(path, obj):
    blob = json.dumps(_jsonable(obj), indent=2, sort_keys=True).encode() + b"\n"
    return atomic_write_bytes(path, blob)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Manifest:
    """Collects emitted files and per-point statuses; written once at the end."""

    def __init__(self, out_dir, config):
        self.out_dir = Path(out_dir)
        self.config = config
        self.files = {}
        self.points = []

    def add_file(self, path):
        path = Path(path)
        rel = str(path.relative_to(self.out_dir))
        self.files[rel] = {"size": path.stat().st_size, "sha256": sha256(path)}

    def add_point(self, **info):
        self.points.append(_jsonable(info))

    @property
    def failures(self):
        return [p for p in self.points if p.get("status") != "ok"]

    def write(self, name="manifest.json"):
        doc = {
            "tool": "shakenlattice",
            "version": __version__,
            "config_hash": self.config.hash(),
            "config": self.config.physics_dict(),
            "files": [{"path": k, **v} for k, v in sorted(self.files.items())],
            "points": sorted(self.points, key=lambda p: json.dumps(p, sort_keys=True)),
        }
        return write_json(self.out_dir / name, doc)
