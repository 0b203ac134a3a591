"""File formats: matrix/vector files, dataset CSV, result tables, checkpoints.

Everything here is plain text and byte-deterministic for a given build:
floats are written with ``repr`` (shortest exact round-trip), there are no
timestamps, and row order is fixed by the caller.  Comment lines start with
'#' and precede the header.

Matrix file layout::

    rows,cols
    <rows>,<cols>
    <value>          # one per line, row major

Vector files hold one value per line.  Dataset CSVs have columns
``sample_id, feature_0..feature_{d-1}, clean_class, noisy_class, flipped``.
"""

from __future__ import annotations

import numpy as np

from .instances import NoisyDataset


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_matrix(path, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("write_matrix expects a 2-d array")
    lines = ["rows,cols", "%d,%d" % a.shape]
    lines.extend(repr(float(v)) for v in a.ravel(order="C"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "rows,cols":
        raise ValueError("%s: missing 'rows,cols' header" % path)
    rows, cols = (int(t) for t in lines[1].split(","))
    values = np.array([float(t) for t in lines[2:]])
    if values.size != rows * cols:
        raise ValueError("%s: expected %d values, found %d" % (path, rows * cols, values.size))
    return values.reshape(rows, cols)


def write_vector(path, x: np.ndarray) -> None:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("write_vector expects a 1-d array")
    with open(path, "w") as fh:
        fh.write("\n".join(repr(float(v)) for v in x) + "\n")


def read_vector(path) -> np.ndarray:
    with open(path) as fh:
        return np.array([float(ln) for ln in fh if ln.strip()])


def write_table(path, columns: list[str], rows: list, comments: list[str] | None = None) -> None:
    """Write a CSV with optional leading '#' comment lines.

    Rows are sequences matching ``columns``; cells are formatted with
    :func:`_fmt` so the file is byte-identical across runs with the same
    inputs.
    """
    lines = ["# %s" % c for c in (comments or [])]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row has %d cells, header has %d" % (len(row), len(columns)))
        lines.append(",".join(_fmt(c) for c in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Read back a CSV written by :func:`write_table` (cells stay strings)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("%s: empty table" % path)
    columns = lines[0].split(",")
    return columns, [ln.split(",") for ln in lines[1:]]


def write_dataset(path, ds: NoisyDataset) -> None:
    cols = (["sample_id"]
            + ["feature_%d" % j for j in range(ds.dim)]
            + ["clean_class", "noisy_class", "flipped"])
    rows = []
    for i in range(ds.n):
        rows.append([i] + [float(v) for v in ds.features[i]]
                    + [int(ds.clean_labels[i]), int(ds.noisy_labels[i]), bool(ds.flipped[i])])
    write_table(path, cols, rows)


def read_dataset(path, num_classes: int | None = None) -> NoisyDataset:
    cols, rows = read_table(path)
    dim = len(cols) - 4
    if cols[0] != "sample_id" or cols[-3:] != ["clean_class", "noisy_class", "flipped"]:
        raise ValueError("%s: not a dataset CSV" % path)
    feats = np.array([[float(c) for c in r[1:1 + dim]] for r in rows])
    clean = np.array([int(r[-3]) for r in rows])
    noisy = np.array([int(r[-2]) for r in rows])
    flipped = np.array([r[-1] == "1" for r in rows])
    k = num_classes if num_classes is not None else int(max(clean.max(), noisy.max())) + 1
    ds = NoisyDataset(features=feats, clean_labels=clean, noisy_labels=noisy,
                      flipped=flipped, num_classes=k)
    ds.validate()
    return ds


CHECKPOINT_MAGIC = "noisesep-checkpoint 1"


def write_arrays(path, arrays: dict) -> None:
    """Versioned flat text dump of named arrays (checkpoint format)."""
    lines = [CHECKPOINT_MAGIC]
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=float)
        lines.append("%s %s" % (name, " ".join(str(d) for d in arr.shape)))
        lines.extend(repr(float(v)) for v in arr.ravel(order="C"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_arrays(path) -> dict:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError("%s: bad or missing checkpoint header" % path)
    arrays = {}
    i = 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        parts = lines[i].split()
        name, shape = parts[0], tuple(int(d) for d in parts[1:])
        count = int(np.prod(shape)) if shape else 1
        vals = np.array([float(v) for v in lines[i + 1:i + 1 + count]])
        arrays[name] = vals.reshape(shape)
        i += 1 + count
    return arrays
