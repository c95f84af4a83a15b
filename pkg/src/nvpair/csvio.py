"""CSV output with comment-prefixed metadata.

Layout::

    # x_label, y_label
    # meta: {"key": value, ...}
    x0,y0
    ...

Numbers are written with 17 significant digits so they read back bit-exactly.
"""

import json
from pathlib import Path

import numpy as np

from .results import SweepResult


def _fmt(v):
    return format(float(v), ".17g")


def _meta_line(meta):
    return "# meta: " + json.dumps(meta, sort_keys=True, separators=(", ", ": "), default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_table(path, headers, rows, meta=None):
    lines = ["# " + ", ".join(headers), _meta_line(meta or {})]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as err:
        raise OSError(f"cannot write {path}: {err.strerror}") from None


def write_csv(result, path):
    y = result.y.reshape(len(result), -1) if len(result) else np.empty((0, 1))
    rows = (np.column_stack([result.x, y]) if len(result) else [])
    write_table(path, result.headers, rows, result.meta)


def read_table(path):
    """Read any table in this layout: (headers, meta, 2-D array).

    Header labels are separated by ", " so that labels may contain bare commas.
    """
    headers, meta, rows = None, {}, []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("meta:"):
                meta = json.loads(body[5:])
            elif headers is None:
                headers = [h.strip() for h in body.split(", ")]
            continue
        rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(len(rows), -1) if rows else np.empty((0, 2))
    headers = headers or [f"col{i}" for i in range(data.shape[1])]
    if rows and len(headers) != data.shape[1]:
        raise ValueError(f"{path}: {len(headers)} header labels for {data.shape[1]} columns")
    return headers, meta, data


def read_csv(path):
    """Read a file written by ``write_csv`` (or any comma-separated numeric table).

    Returns a SweepResult; with more than one data column ``y`` is 2-D.
    """
    headers, meta, data = read_table(path)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: need at least two columns")
    if data.shape[1] == 2:
        return SweepResult(headers[0], headers[1], data[:, 0], data[:, 1], meta=meta)
    return SweepResult(headers[0], "y", data[:, 0], data[:, 1:], columns=headers[1:], meta=meta)
