"""Sparse random projections of a high-dimensional series.

A direction matrix D has i.i.d. entries

    +sqrt(3) with probability 1/6,
    0        with probability 2/3,
    -sqrt(3) with probability 1/6,

so each entry has mean 0 and variance 1 and two thirds of the work in a
projection can be skipped. A data matrix X (n rows of p-dimensional
observations) is reduced to k univariate series Y = X D / sqrt(k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ._rng import generator

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class DataMatrix:
    """n x p matrix of observations; rows are time points."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("data matrix must be 2-dimensional and non-empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("data matrix contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ProjectionMatrix:
    """p x k sparse direction matrix with entries in {-sqrt(3), 0, +sqrt(3)}."""

    entries: sparse.csc_array = field(repr=False)
    p: int
    k: int
    seed: int

    def __post_init__(self) -> None:
        if self.entries.shape != (self.p, self.k):
            raise ValueError("entry matrix shape does not match declared (p, k)")

    def toarray(self) -> np.ndarray:
        return self.entries.toarray()

    def save_triplets(self, path: str) -> None:
        """Write a (row, col, sign) triplet file with a (p, k, seed) header.

        Signs are +-1; the stored entry value is sign * sqrt(3). Triplets are
        emitted in column-major order so the file is byte-stable.
        """
        coo = self.entries.tocoo()
        order = np.lexsort((coo.row, coo.col))
        rows, cols = coo.row[order], coo.col[order]
        signs = np.where(coo.data[order] > 0, 1, -1)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(f"p={self.p},k={self.k},seed={self.seed}\n")
            for r, c, s in zip(rows, cols, signs):
                fh.write(f"{r},{c},{s:+d}\n")

    @classmethod
    def load_triplets(cls, path: str) -> "ProjectionMatrix":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            meta = dict(item.split("=") for item in header.split(","))
            p, k, seed = int(meta["p"]), int(meta["k"]), int(meta["seed"])
            rows, cols, vals = [], [], []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                r, c, s = line.split(",")
                rows.append(int(r))
                cols.append(int(c))
                vals.append(int(s) * SQRT3)
        entries = sparse.csc_array(
            (vals, (rows, cols)), shape=(p, k), dtype=np.float64
        )
        return cls(entries=entries, p=p, k=k, seed=seed)


@dataclass(frozen=True)
class ProjectedSeries:
    """n x k matrix of projected univariate series (column r is y_r)."""

    values: np.ndarray
    source_seed: int

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


def generate_directions(p: int, k: int, seed: int) -> ProjectionMatrix:
    """Draw a p x k sparse direction matrix.

    Each entry is independently +sqrt(3) with probability 1/6, 0 with
    probability 2/3 and -sqrt(3) with probability 1/6. Identical (p, k, seed)
    give bitwise-identical matrices.
    """
    if p < 1 or k < 1:
        raise ValueError("p and k must be positive")
    u = generator(seed, "projection.directions").random((p, k))
    signs = np.zeros((p, k), dtype=np.int8)
    signs[u < 1.0 / 6.0] = 1
    signs[u >= 5.0 / 6.0] = -1
    entries = sparse.csc_array(signs.astype(np.float64) * SQRT3)
    return ProjectionMatrix(entries=entries, p=p, k=k, seed=seed)


def project(X: DataMatrix | np.ndarray, D: ProjectionMatrix) -> ProjectedSeries:
    """Project X to k univariate series: Y = X D / sqrt(k)."""
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if values.shape[1] != D.p:
        raise ValueError(
            f"dimension mismatch: X has {values.shape[1]} columns, D has {D.p} rows"
        )
    # sparse @ dense keeps the cost proportional to the ~pk/3 nonzeros
    y = (D.entries.T @ values.T).T / np.sqrt(D.k)
    return ProjectedSeries(values=np.ascontiguousarray(y), source_seed=D.seed)
