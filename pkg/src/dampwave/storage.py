"""Flat-file formats: field snapshots, traces, records, fits and configs.

Field CSV has columns ``x,t,value``.  The binary field dump is a 16-byte
header (``b"DWF1"`` then ``h``, ``X``, ``t_max`` as little-endian float32)
followed by float64 values in row-major order, one row per time level.
"""

from __future__ import annotations

import csv
import json
import math
import struct
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

FIELD_MAGIC = b"DWF1"
_HEADER = struct.Struct("<4s3f")
RECORD_COLUMNS = ("eps", "p", "solver", "h", "t_blowup", "status", "walltime")
TRACE_COLUMNS = ("t", "F", "F'", "F''", "source")


class StorageError(OSError):
    """I/O failure carrying the offending path."""


def _wrap(path, exc):
    return StorageError(f"{path}: {exc}")


# -- fields -----------------------------------------------------------------


def write_field_csv(path, x, t, values):
    values = np.asarray(values, dtype=float)
    X, T = np.meshgrid(np.asarray(x, float), np.asarray(t, float))
    data = np.column_stack([X.ravel(), T.ravel(), values.ravel()])
    try:
        np.savetxt(path, data, delimiter=",", header="x,t,value", comments="", fmt="%.17g")
    except OSError as e:
        raise _wrap(path, e) from e


def read_field_csv(path):
    """Return ``(x, t, values)`` with ``values`` shaped ``(len(t), len(x))``."""
    try:
        with open(path) as fh:
            if fh.readline().strip() != "x,t,value":
                raise StorageError(f"{path}: bad field CSV header")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as e:
        raise _wrap(path, e) from e
    x = np.unique(data[:, 0])
    t = np.unique(data[:, 1])
    return x, t, data[:, 2].reshape(len(t), len(x))


def write_field_binary(path, values, h, X, t_max):
    values = np.ascontiguousarray(values, dtype="<f8")
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(FIELD_MAGIC, h, X, t_max))
            fh.write(values.tobytes(order="C"))
    except OSError as e:
        raise _wrap(path, e) from e


def read_field_binary(path):
    """Return ``(values, h, X, t_max)``; the column count is ``2 X/h + 1``."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise _wrap(path, e) from e
    if len(raw) < _HEADER.size:
        raise StorageError(f"{path}: truncated header")
    magic, h, X, t_max = _HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise StorageError(f"{path}: bad magic {magic!r}")
    ncols = 2 * int(round(X / h)) + 1
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if flat.size % ncols:
        raise StorageError(f"{path}: payload is not a whole number of rows")
    return flat.reshape(-1, ncols).copy(), float(h), float(X), float(t_max)


# -- functional traces and slicing ------------------------------------------


def write_trace_csv(path, trace):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "F", "F'", "F''", "source"))
            for row in zip(trace.t, trace.F, trace.dF, trace.d2F, trace.source):
                w.writerow([repr(float(v)) for v in row])
    except OSError as e:
        raise _wrap(path, e) from e


def read_trace_csv(path) -> dict:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as e:
        raise _wrap(path, e) from e
    return dict(zip(TRACE_COLUMNS, data.T))


def write_json(path, obj):
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    except OSError as e:
        raise _wrap(path, e) from e


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise _wrap(path, e) from e


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# -- lifespan records ---------------------------------------------------------


def format_lifespan(log_t) -> str:
    """Decimal text for ``exp(log_t)``, exact in exponent even beyond float range."""
    if log_t is None:
        return ""
    if log_t < 700:
        return repr(math.exp(log_t))
    l10 = log_t / math.log(10.0)
    e = math.floor(l10)
    return f"{10 ** (l10 - e):.15f}e+{e}"


def parse_lifespan(text: str):
    """Inverse of :func:`format_lifespan`: returns ``(t, log_t)``; ``t`` is None when it overflows."""
    if text == "":
        return None, None
    v = float(text)
    if math.isfinite(v):
        return v, math.log(v)
    mant, exp = text.lower().split("e")
    return None, math.log(float(mant)) + int(exp) * math.log(10.0)


def write_records_csv(path, records):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECORD_COLUMNS)
            for r in records:
                w.writerow(
                    [
                        repr(float(r.eps)),
                        repr(float(r.p)),
                        r.solver,
                        "" if r.h is None else repr(float(r.h)),
                        format_lifespan(r.log_t_blowup),
                        r.status,
                        f"{r.walltime:.6f}",
                    ]
                )
    except OSError as e:
        raise _wrap(path, e) from e


def read_records_csv(path):
    from .functional import LifespanRecord

    out = []
    try:
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd, None)
            if tuple(header or ()) != RECORD_COLUMNS:
                raise StorageError(f"{path}: unexpected header {header}")
            for row in rd:
                eps, p, solver, h, tb, status, wall = row
                t, lt = parse_lifespan(tb)
                out.append(
                    LifespanRecord(
                        eps=float(eps),
                        p=float(p),
                        solver=solver,
                        t_blowup=t,
                        log_t_blowup=lt,
                        status=status,
                        h=float(h) if h else None,
                        confirmed=status == "blew_up",
                        walltime=float(wall),
                    )
                )
    except OSError as e:
        raise _wrap(path, e) from e
    return out


# -- configs -------------------------------------------------------------------


def load_config(path) -> dict:
    """Flat ``key = value`` file in TOML syntax."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise _wrap(path, e) from e
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ValueError(f"{path}: config must be flat, found tables {nested}")
    return data


def dump_config(path, cfg: dict):
    """Write a flat config; values are scalars, strings or lists of numbers."""

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return repr(v)

    try:
        with open(path, "w") as fh:
            for k, v in cfg.items():
                if v is not None:
                    fh.write(f"{k} = {fmt(v)}\n")
    except OSError as e:
        raise _wrap(path, e) from e
