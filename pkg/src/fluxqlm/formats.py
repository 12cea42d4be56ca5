"""On-disk formats: operator triplets, state-vector binaries, CSV tables, JSON.

Every writer goes through ``atomic_write`` (temp file in the target directory,
then rename), so a crashed run never leaves a half-written file behind.
"""
from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError

STATE_MAGIC = b"FLX1"


def atomic_write(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt_float(x: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(x))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(list(header))
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))


def read_csv(path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# operator triplets -------------------------------------------------------------

def triplets_text(op) -> str:
    rows, cols, vals = op.entries()
    lines = [f"# dim {op.dim} tag {op.tag} label {op.label or '-'}", f"{op.dim} {len(vals)}"]
    for r, c, v in zip(rows, cols, vals):
        v = complex(v)
        lines.append(f"{r} {c} {fmt_float(v.real)} {fmt_float(v.imag)}")
    return "\n".join(lines) + "\n"


def write_triplets(op, path) -> Path:
    return atomic_write(path, triplets_text(op))


def read_triplets(path) -> tuple:
    """Returns (dim, rows, cols, values) from a triplet dump."""
    rows, cols, vals = [], [], []
    dim = None
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if dim is None:
                dim = int(parts[0])
                continue
            if len(parts) != 4:
                raise ConfigError(f"{path}:{ln}: expected 'row col re im'")
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            vals.append(complex(float(parts[2]), float(parts[3])))
    return dim, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals)


# state-vector binaries ---------------------------------------------------------

def state_bytes(amplitudes: np.ndarray) -> bytes:
    a = np.ascontiguousarray(amplitudes, dtype="<c16")
    return STATE_MAGIC + struct.pack("<Q", len(a)) + a.view("<f8").tobytes()


def write_state(path, amplitudes) -> Path:
    return atomic_write(path, state_bytes(amplitudes))


def read_state(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != STATE_MAGIC:
        raise DomainError("not a state dump (bad magic)")
    (n,) = struct.unpack("<Q", raw[4:12])
    body = raw[12:]
    if len(body) != 16 * n:
        raise DomainError(f"state dump truncated: expected {16 * n} bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f8").view("<c16").copy()
