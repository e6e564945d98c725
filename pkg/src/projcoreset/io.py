"""Dataset ingestion and the weighted-matrix export format.

Supported inputs:

* dense CSV, one point per line (``header=True`` skips a first line);
* IDX (the MNIST container: big-endian magic ``00 00 <type> <ndim>``,
  ``ndim`` uint32 sizes, then raw data), optionally gzipped; every item
  is flattened row-major, so 28×28 images become 784-dim rows;
* triplets: a ``rows cols nnz`` header then ``nnz`` lines ``i j v``
  (0-based), loaded as CSR.

Zero rows are dropped at load time and counted in ``Dataset.dropped_zero_rows``.
Coresets are exported as CSV with a header ``x0,...,x{d-1},weight``.
"""

from __future__ import annotations

import csv
import gzip
import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import Coreset, CoresetSource, WeightedPointSet


class FormatError(ValueError):
    def __init__(self, path, line, msg):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {msg}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    points: WeightedPointSet
    path: str = ""
    format: str = ""
    dropped_zero_rows: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.points.n, self.points.d


def _make(name, matrix, path, fmt, weights=None) -> Dataset:
    P, dropped = WeightedPointSet.from_rows(matrix, weights)
    return Dataset(name, P, str(path), fmt, dropped)


def _open_text(path):
    path = str(path)
    if path.endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, "r", encoding="utf-8", newline="")


def _parse_float(tok, path, line):
    try:
        v = float(tok)
    except ValueError:
        raise FormatError(path, line, f"non-numeric cell {tok!r}") from None
    if not np.isfinite(v):
        raise FormatError(path, line, f"non-finite cell {tok!r}")
    return v


def load_dense_csv(path, header: bool = False, name: str | None = None) -> Dataset:
    rows = []
    width = None
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise FormatError(path, lineno, f"expected {width} cells, found {len(rec)}")
            rows.append([_parse_float(c.strip(), path, lineno) for c in rec])
    if not rows:
        raise FormatError(path, None, "no data rows")
    return _make(name or Path(path).stem, np.asarray(rows), path, "csv")


_IDX_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def _read_bytes(path) -> bytes:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx_array(path) -> np.ndarray:
    """Raw IDX contents with their declared shape."""
    buf = _read_bytes(path)
    if len(buf) < 4:
        raise FormatError(path, None, "truncated magic number")
    z0, z1, code, ndim = struct.unpack(">BBBB", buf[:4])
    if z0 or z1 or code not in _IDX_TYPES or ndim == 0:
        raise FormatError(path, None, f"bad magic 0x{buf[:4].hex()}")
    head = 4 + 4 * ndim
    if len(buf) < head:
        raise FormatError(path, None, "truncated dimension header")
    dims = struct.unpack(f">{ndim}I", buf[4:head])
    dt = _IDX_TYPES[code]
    expected = int(np.prod(dims)) * dt.itemsize
    if len(buf) - head != expected:
        raise FormatError(path, None, f"payload is {len(buf) - head} bytes, header implies {expected}")
    return np.frombuffer(buf, dtype=dt, offset=head).reshape(dims)


def load_idx(path, name: str | None = None) -> Dataset:
    arr = read_idx_array(path)
    flat = arr.reshape(arr.shape[0], -1).astype(np.float64)
    return _make(name or Path(path).name.split(".")[0], flat, path, "idx")


def write_idx(path, array) -> None:
    arr = np.asarray(array)
    codes = {v.newbyteorder("="): k for k, v in _IDX_TYPES.items()}
    key = arr.dtype.newbyteorder("=")
    if key not in codes:
        raise ValueError(f"dtype {arr.dtype} has no IDX type code")
    header = struct.pack(">BBBB", 0, 0, codes[key], arr.ndim) + struct.pack(f">{arr.ndim}I", *arr.shape)
    payload = arr.astype(_IDX_TYPES[codes[key]]).tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(header + payload)


def load_triplets(path, name: str | None = None) -> Dataset:
    rows, cols, vals = [], [], []
    with _open_text(path) as fh:
        lines = ((i, ln.strip()) for i, ln in enumerate(fh, start=1))
        lines = ((i, ln) for i, ln in lines if ln and not ln.startswith("#"))
        try:
            lineno, head = next(lines)
        except StopIteration:
            raise FormatError(path, None, "missing 'rows cols nnz' header") from None
        parts = head.split()
        if len(parts) != 3 or not all(p.isdigit() for p in parts):
            raise FormatError(path, lineno, f"malformed header {head!r}")
        n, d, nnz = map(int, parts)
        for lineno, ln in lines:
            parts = ln.split()
            if len(parts) != 3:
                raise FormatError(path, lineno, f"expected 'i j v', got {ln!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise FormatError(path, lineno, f"non-integer index in {ln!r}") from None
            if not (0 <= i < n and 0 <= j < d):
                raise FormatError(path, lineno, f"index ({i}, {j}) outside declared {n}x{d}")
            rows.append(i)
            cols.append(j)
            vals.append(_parse_float(parts[2], path, lineno))
    if len(vals) != nnz:
        raise FormatError(path, None, f"header declares {nnz} entries, found {len(vals)}")
    mat = sp.csr_matrix((np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, d))
    return _make(name or Path(path).stem, mat, path, "triplets")


def write_triplets(path, matrix) -> None:
    coo = sp.coo_matrix(matrix)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")


def write_dense_csv(path, matrix, header: bool = False) -> None:
    M = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{i}" for i in range(M.shape[1])])
        for row in M:
            w.writerow([repr(float(v)) for v in row])


def write_weighted_csv(path, coreset: Coreset) -> None:
    M = coreset.dense()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(M.shape[1])] + ["weight"])
        for row, wt in zip(M, coreset.scale_weights):
            w.writerow([repr(float(v)) for v in row] + [repr(float(wt))])


def load_weighted_csv(path, source: CoresetSource = CoresetSource.COMPOSED) -> Coreset:
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if not head or head[-1].strip() != "weight":
            raise FormatError(path, 1, "last header column must be 'weight'")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(head):
                raise FormatError(path, lineno, f"expected {len(head)} cells, found {len(rec)}")
            rows.append([_parse_float(c.strip(), path, lineno) for c in rec])
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, len(head))
    return Coreset(arr[:, :-1], arr[:, -1], source)


def load_dataset(path, fmt: str | None = None, header: bool = False) -> Dataset:
    """Dispatch on ``fmt`` or, failing that, the file extension."""
    p = str(path)
    base = p[:-3] if p.endswith(".gz") else p
    if fmt is None:
        ext = os.path.splitext(base)[1].lower()
        if ext == ".csv":
            fmt = "csv"
        elif ext in (".idx", ".idx3-ubyte", ".idx1-ubyte") or "ubyte" in base:
            fmt = "idx"
        elif ext in (".tri", ".triplets", ".txt"):
            fmt = "triplets"
        else:
            raise ValueError(f"cannot infer format of {path}; pass fmt explicitly")
    if fmt == "csv":
        return load_dense_csv(path, header=header)
    if fmt == "idx":
        return load_idx(path)
    if fmt == "triplets":
        return load_triplets(path)
    raise ValueError(f"unknown format {fmt!r}")
