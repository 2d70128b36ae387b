"""File formats: Matrix Market coordinate, RFC 4180 CSV, binary PGM (P5)."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from . import sparse as sps
from .errors import DimensionError

MM_BANNER = "%%MatrixMarket matrix coordinate real general"


def _fmt(v) -> str:
    # repr() is the shortest string that round-trips a float exactly
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def mtx_string(A: sps.SparseMatrix) -> str:
    out = [MM_BANNER, f"{A.nrows} {A.ncols} {A.nnz}"]
    out += [f"{i + 1} {j + 1} {_fmt(v)}" for i, j, v in A.triplets()]
    return "\n".join(out) + "\n"


def write_mtx(path, A: sps.SparseMatrix) -> None:
    Path(path).write_text(mtx_string(A))


def parse_mtx(text: str) -> sps.SparseMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise ValueError("missing Matrix Market banner")
    banner = lines[0].lower().split()
    if banner[1:4] != ["matrix", "coordinate", "real"] and banner[1:4] != ["matrix", "coordinate", "integer"]:
        raise ValueError(f"unsupported Matrix Market header: {lines[0]}")
    symmetry = banner[4] if len(banner) > 4 else "general"
    if symmetry not in ("general", "symmetric"):
        raise ValueError(f"unsupported symmetry {symmetry}")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.startswith("%")]
    m, n, nnz = (int(t) for t in body[0].split())
    if len(body) - 1 != nnz:
        raise DimensionError(f"header announces {nnz} entries, found {len(body) - 1}")
    entries = []
    for ln in body[1:]:
        i, j, v = ln.split()
        i, j, v = int(i) - 1, int(j) - 1, float(v)
        entries.append((i, j, v))
        if symmetry == "symmetric" and i != j:
            entries.append((j, i, v))
    return sps.from_triplets(m, n, entries)


def read_mtx(path) -> sps.SparseMatrix:
    return parse_mtx(Path(path).read_text())


def csv_string(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    Path(path).write_bytes(csv_string(header, rows).encode())


def write_dense_csv(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    write_csv(path, None, M.tolist())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def pgm_bytes(img) -> bytes:
    """Binary PGM. Boolean images map set pixels to black on white."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise DimensionError("PGM image must be two-dimensional")
    if img.dtype == bool:
        img = np.where(img, 0, 255).astype(np.uint8)
    elif img.dtype != np.uint8:
        raise TypeError("PGM image must be bool or uint8")
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode() + np.ascontiguousarray(img).tobytes()


def write_pgm(path, img) -> None:
    Path(path).write_bytes(pgm_bytes(img))


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def heatmap(field, nx: int, ny: int) -> np.ndarray:
    """Scale a grid field linearly to 0..255 grey levels (row ``iy``, column ``ix``)."""
    field = np.asarray(field, dtype=np.float64)
    if field.shape != (nx * ny,):
        raise DimensionError(f"field of length {field.size} does not fit a {nx}x{ny} grid")
    lo, hi = field.min(), field.max()
    span = hi - lo if hi > lo else 1.0
    return np.rint((field - lo) / span * 255).astype(np.uint8).reshape(ny, nx)
