"""Nonnegative sparse operators in compressed-row form with matvec accounting."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from . import _backend


class MatrixFormatError(ValueError):
    """Malformed coordinate text; ``lineno`` is 1-based (0 if not line-specific)."""

    def __init__(self, message: str, lineno: int = 0):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


@dataclass
class OpCounter:
    """Per-run count of applications of A or A^T."""

    matvec_count: int = 0

    def tick(self) -> None:
        self.matvec_count += 1


class NonnegativeSparseMatrix:
    """Immutable nonnegative CSR matrix without empty rows or columns.

    Transpose products scatter over rows; A^T is never stored.
    """

    __slots__ = ("shape", "indptr", "indices", "data", "_one_norm")

    def __init__(self, shape, indptr, indices, data, *, check: bool = True):
        m, n = int(shape[0]), int(shape[1])
        self.shape = (m, n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if check:
            self._validate()
        for arr in (self.indptr, self.indices, self.data):
            arr.flags.writeable = False
        colsum = np.bincount(self.indices, weights=self.data, minlength=n)
        self._one_norm = float(colsum.max()) if n else 0.0

    # -- construction -------------------------------------------------

    @classmethod
    def from_triplets(cls, shape, rows, cols, vals) -> "NonnegativeSparseMatrix":
        """Build from 0-based (row, col, value) triplets; explicit zeros are dropped."""
        m, n = int(shape[0]), int(shape[1])
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("triplet arrays must have equal length")
        if vals.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise ValueError("triplet index out of bounds")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("matrix entries must be finite and nonnegative")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size > 1:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate entry ({rows[k]}, {cols[k]})")
        keep = vals > 0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        indptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=m), out=indptr[1:])
        return cls((m, n), indptr, cols, vals)

    @classmethod
    def from_dense(cls, a) -> "NonnegativeSparseMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        rows, cols = np.nonzero(a)
        if np.any(a < 0):
            raise ValueError("matrix entries must be nonnegative")
        return cls.from_triplets(a.shape, rows, cols, a[rows, cols])

    @classmethod
    def identity(cls, n: int) -> "NonnegativeSparseMatrix":
        idx = np.arange(n)
        return cls.from_triplets((n, n), idx, idx, np.ones(n))

    def _validate(self) -> None:
        m, n = self.shape
        if self.indptr.shape != (m + 1,) or self.indptr[0] != 0:
            raise ValueError("bad row pointer array")
        if np.any(np.diff(self.indptr) < 0) or self.indptr[-1] != self.indices.size:
            raise ValueError("bad row pointer array")
        if self.indices.size != self.data.size:
            raise ValueError("indices and data differ in length")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError("column index out of bounds")
        if np.any(self.data < 0) or not np.all(np.isfinite(self.data)):
            raise ValueError("matrix entries must be finite and nonnegative")
        row_of = np.repeat(np.arange(m), np.diff(self.indptr))
        key = row_of * max(n, 1) + self.indices
        if np.unique(key).size != key.size:
            raise ValueError("duplicate (row, col) entry")
        nz = self.data > 0
        row_nnz = np.bincount(row_of[nz], minlength=m)
        col_nnz = np.bincount(self.indices[nz], minlength=n)
        if np.any(row_nnz == 0):
            raise ValueError(f"row {int(np.flatnonzero(row_nnz == 0)[0])} is all zero")
        if np.any(col_nnz == 0):
            raise ValueError(f"column {int(np.flatnonzero(col_nnz == 0)[0])} is all zero")

    # -- products -----------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    def matvec(self, x, counter: OpCounter | None = None) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise ValueError(f"matvec: expected length {self.shape[1]}, got {x.shape}")
        if counter is not None:
            counter.tick()
        return _backend.csr_matvec(self.indptr, self.indices, self.data, x)

    def rmatvec(self, u, counter: OpCounter | None = None) -> np.ndarray:
        u = np.ascontiguousarray(u, dtype=np.float64)
        if u.shape != (self.shape[0],):
            raise ValueError(f"rmatvec: expected length {self.shape[0]}, got {u.shape}")
        if counter is not None:
            counter.tick()
        return _backend.csr_rmatvec(self.indptr, self.indices, self.data, u, self.shape[1])

    def one_norm(self) -> float:
        """Induced l1 norm, i.e. the largest column sum."""
        return self._one_norm

    def column_sums(self) -> np.ndarray:
        return np.bincount(self.indices, weights=self.data, minlength=self.shape[1])

    def row_sums(self) -> np.ndarray:
        return np.add.reduceat(self.data, self.indptr[:-1]) if self.nnz else np.zeros(self.shape[0])

    def toarray(self) -> np.ndarray:
        m, n = self.shape
        out = np.zeros((m, n))
        rows = np.repeat(np.arange(m), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out

    def triplets(self):
        """0-based (rows, cols, vals) arrays in row-major order."""
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        return rows, self.indices.copy(), self.data.copy()

    def __eq__(self, other) -> bool:
        if not isinstance(other, NonnegativeSparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"NonnegativeSparseMatrix(shape={self.shape}, nnz={self.nnz})"

    # -- coordinate text ----------------------------------------------

    def to_coordinate_text(self, fp: TextIO | None = None) -> str | None:
        """Write "m n nnz" then 1-based "i j v" lines; values use repr for exact round-trip."""
        out = fp if fp is not None else io.StringIO()
        m, n = self.shape
        out.write(f"{m} {n} {self.nnz}\n")
        rows, cols, vals = self.triplets()
        for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            out.write(f"{i + 1} {j + 1} {v!r}\n")
        if fp is None:
            return out.getvalue()
        return None


def _content_lines(lines: Iterable[str]):
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("%", 1)[0].strip()
        if line:
            yield lineno, line


def from_coordinate_text(text: str | TextIO) -> NonnegativeSparseMatrix:
    """Parse coordinate text (header "m n nnz", then 1-based "i j v"; '%' starts a comment)."""
    lines = text.splitlines() if isinstance(text, str) else text
    it = _content_lines(lines)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise MatrixFormatError("empty input") from None
    parts = header.split()
    try:
        m, n, nnz = (int(p) for p in parts)
    except ValueError:
        raise MatrixFormatError(f"bad header {header!r}", lineno) from None
    if m <= 0 or n <= 0 or nnz < 0:
        raise MatrixFormatError(f"bad header {header!r}", lineno)

    rows, cols, vals = [], [], []
    seen = set()
    for lineno, line in it:
        parts = line.split()
        if len(parts) != 3:
            raise MatrixFormatError(f"expected 'i j v', got {line!r}", lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixFormatError(f"cannot parse {line!r}", lineno) from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixFormatError(f"index ({i}, {j}) out of bounds", lineno)
        if not np.isfinite(v) or v < 0:
            raise MatrixFormatError(f"negative or non-finite value {parts[2]}", lineno)
        if (i, j) in seen:
            raise MatrixFormatError(f"duplicate entry ({i}, {j})", lineno)
        seen.add((i, j))
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
    if len(vals) != nnz:
        raise MatrixFormatError(f"header announces {nnz} entries, found {len(vals)}")
    return NonnegativeSparseMatrix.from_triplets((m, n), rows, cols, vals)


def matvec(A: NonnegativeSparseMatrix, x, counter: OpCounter | None = None) -> np.ndarray:
    return A.matvec(x, counter)


def rmatvec(A: NonnegativeSparseMatrix, u, counter: OpCounter | None = None) -> np.ndarray:
    return A.rmatvec(u, counter)


def one_norm(A: NonnegativeSparseMatrix) -> float:
    return A.one_norm()
