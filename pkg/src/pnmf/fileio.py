"""CSV matrices and label vectors, run directories and manifests.

Matrix files have no header, one row per line, comma separated, written with
17 significant digits so that a write/read round trip is exact. Lines
starting with ``#`` are comments.
"""
import hashlib
import json
import os

import numpy as np

from .errors import InputFormatError, ValidationError

FLOAT_FMT = "%.17g"


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def read_matrix(path):
    """Read a headerless numeric CSV into a 2-D float array; errors carry the line number."""
    rows = []
    width = None
    for lineno, line in _data_lines(path):
        fields = line.split(",")
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            bad = next(f for f in fields if not _is_float(f))
            raise InputFormatError(f"cannot parse {bad.strip()!r} as a number", path, lineno) from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise InputFormatError(f"expected {width} fields, found {len(vals)}", path, lineno)
        rows.append(vals)
    if not rows:
        raise InputFormatError("no data rows", path)
    M = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        i, j = np.argwhere(~np.isfinite(M))[0]
        raise InputFormatError(f"non-finite value in data row {i + 1}, column {j + 1}", path)
    return M


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_vector(path):
    M = read_matrix(path)
    if M.shape[1] != 1:
        raise InputFormatError(f"expected a single column, found {M.shape[1]}", path)
    return M[:, 0]


def read_labels(path):
    out = []
    for lineno, line in _data_lines(path):
        try:
            out.append(int(line))
        except ValueError:
            raise InputFormatError(f"cannot parse {line!r} as an integer label", path, lineno) from None
    if not out:
        raise InputFormatError("no labels", path)
    return np.array(out, dtype=np.int64)


def write_matrix(path, M, header=None):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            for h in header.splitlines():
                fh.write(f"# {h}\n")
        for row in M:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")


def write_vector(path, v, header=None):
    write_matrix(path, np.asarray(v, dtype=np.float64).reshape(-1, 1), header)


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in np.asarray(labels, dtype=np.int64):
            fh.write(f"{int(v)}\n")


def load_data(path, orientation="samples-rows", log1p=False, top_variance_genes=None):
    """Read a data CSV and return ``(X (p, n), preprocessing record)``.

    ``orientation="samples-rows"`` (default) means each row is one sample.
    ``log1p`` and ``top_variance_genes`` are applied in that order.
    """
    M = read_matrix(path)
    if orientation == "samples-rows":
        X = np.ascontiguousarray(M.T)
    elif orientation == "features-rows":
        X = M
    else:
        raise ValidationError(f"unknown orientation {orientation!r}")
    record = dict(orientation=orientation, log1p=bool(log1p), top_variance_genes=top_variance_genes)
    if log1p:
        if np.any(X <= -1):
            raise ValidationError("log1p needs entries > -1")
        X = np.log1p(X)
    if top_variance_genes is not None:
        k = int(top_variance_genes)
        if not 1 <= k <= X.shape[0]:
            raise ValidationError(f"--top-variance-genes must be in [1, {X.shape[0]}]")
        var = X.var(axis=1)
        keep = np.sort(np.argsort(-var, kind="stable")[:k])
        X = np.ascontiguousarray(X[keep])
        record["kept_features"] = keep.tolist()
    return X, record


def write_manifest(path, manifest):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(run_dir):
    path = os.path.join(run_dir, "manifest.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(str(exc), path, exc.lineno) from None
