"""Text serialization of snapshots and diagnostics.

Floats are written with 17 significant digits, which round-trips every
IEEE double exactly.
"""
import csv
import io as _io
from typing import NamedTuple

import numpy as np

from .errors import InputError
from .phase_grid import Lattice

FLOAT_FMT = "%.16e"
SNAPSHOT_VERSION = 1


def fmt(x):
    return FLOAT_FMT % x


class Snapshot(NamedTuple):
    t: float
    step: int
    sign: str
    lattice: Lattice
    f: np.ndarray
    phi: np.ndarray
    u: np.ndarray
    v: np.ndarray


def _row(values):
    return ",".join(FLOAT_FMT % v for v in values) + "\n"


def snapshot_text(state):
    """Header lines starting with '#', then f (one x per row, p along the
    row), then one row each for phi, u and v."""
    lat = state.f.lattice
    fld = state.field
    head = [
        f"# nordvlasov snapshot version {SNAPSHOT_VERSION}\n",
        f"# t {fmt(state.t)}\n",
        f"# step {state.n}\n",
        f"# sign {fld.sign}\n",
        f"# grid {fmt(lat.x_min)} {fmt(lat.x_max)} {lat.nx} {fmt(lat.p_min)} {fmt(lat.p_max)} {lat.n_p}\n",
    ]
    buf = _io.StringIO()
    buf.writelines(head)
    for row in state.f.f:
        buf.write(_row(row))
    for arr in (fld.phi, fld.u, fld.v):
        buf.write(_row(arr))
    return buf.getvalue()


def write_snapshot(state, path):
    text = snapshot_text(state)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(text)
    return path


def read_snapshot(path):
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    head = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            parts = line[1:].split()
            head[parts[0]] = parts[1:]
        elif line:
            body.append(line)
    try:
        if int(head["nordvlasov"][-1]) != SNAPSHOT_VERSION:
            raise InputError(f"unsupported snapshot version {head['nordvlasov'][-1]}")
        g = head["grid"]
        lat = Lattice(float(g[0]), float(g[1]), int(g[2]), float(g[3]), float(g[4]), int(g[5]))
        t = float(head["t"][0])
        step = int(head["step"][0])
        sign = head["sign"][0]
    except (KeyError, IndexError, ValueError) as exc:
        raise InputError(f"malformed snapshot header in {path}: {exc}") from None
    nx1, np1 = lat.shape
    if len(body) != nx1 + 3:
        raise InputError(f"snapshot {path} has {len(body)} data rows, expected {nx1 + 3}")
    rows = [np.array([float(v) for v in line.split(",")]) for line in body]
    f = np.vstack(rows[:nx1])
    if f.shape != (nx1, np1):
        raise InputError(f"snapshot {path}: f has shape {f.shape}, expected {(nx1, np1)}")
    return Snapshot(t, step, sign, lat, f, rows[nx1], rows[nx1 + 1], rows[nx1 + 2])


def zero_payload_bytes(nx, n_p):
    """Byte length of the data rows of an all-zero snapshot."""
    width = len(fmt(0.0))
    f_bytes = (nx + 1) * ((n_p + 1) * width + n_p + 1)
    field_bytes = 3 * ((nx + 1) * width + nx + 1)
    return f_bytes + field_bytes


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path, columns, rows):
    """Rows are dicts or sequences matching ``columns``."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            vals = [row[c] for c in columns] if isinstance(row, dict) else row
            w.writerow([_cell(v) for v in vals])
    return path


def read_csv(path):
    """Returns (columns, rows of strings)."""
    with open(path, encoding="ascii", newline="") as fh:
        r = list(csv.reader(fh))
    return r[0], r[1:]


def write_diagnostics(records, path):
    from .diagnostics import DiagnosticsRecord
    return write_csv(path, DiagnosticsRecord.columns(), [r.as_dict() for r in records])
