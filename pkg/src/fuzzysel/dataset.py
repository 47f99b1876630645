"""Dataset container, seeded synthetic generators and CSV I/O.

Random draws use numpy's PCG64 generator (``numpy.random.default_rng(seed)``).
Normal variates are produced by the inverse-CDF transform: a uniform draw
``u ~ U[0, 1)`` is mapped through ``scipy.special.ndtri``.  Draws are made one
cell block at a time: row blocks in order, and within a row block the columns
from left to right, each column block drawing ``block_size`` values in row
order.  Given the same seed this fixes the realization exactly.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtri

UNIFORM_LOW = -10.0
UNIFORM_HIGH = 10.0


class DatasetError(ValueError):
    """Raised for malformed or inconsistent data."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus 1-based integer class labels.

    ``targets`` (one-hot, n x C) is derived from ``labels`` on construction.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    class_count: int
    targets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"features must be a non-empty 2-D matrix, got shape {X.shape}")
        n, P = X.shape
        if y.shape != (n,):
            raise DatasetError(f"labels must have length {n}, got shape {y.shape}")
        C = int(self.class_count)
        if C < 2:
            raise DatasetError("at least two classes are required")
        if y.min() < 1 or y.max() > C:
            raise DatasetError(f"labels must lie in 1..{C}")
        counts = np.bincount(y - 1, minlength=C)
        if np.any(counts == 0):
            empty = [k + 1 for k in np.flatnonzero(counts == 0)]
            raise DatasetError(f"classes with no instances: {empty}")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features contain non-finite values")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != P:
            raise DatasetError(f"expected {P} feature names, got {len(names)}")
        X.setflags(write=False)
        y.setflags(write=False)
        T = np.zeros((n, C))
        T[np.arange(n), y - 1] = 1.0
        T.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "class_count", C)
        object.__setattr__(self, "targets", T)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def P(self) -> int:
        return self.features.shape[1]

    @property
    def C(self) -> int:
        return self.class_count

    def class_rows(self, k: int) -> np.ndarray:
        """Feature rows belonging to 1-based class ``k``."""
        return self.features[self.labels == k]

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.features[rows], self.labels[rows], self.feature_names, self.class_count)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None  # type: ignore[assignment]


def _names(P: int) -> tuple[str, ...]:
    return tuple(f"x{j + 1}" for j in range(P))


def _uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    return UNIFORM_LOW + (UNIFORM_HIGH - UNIFORM_LOW) * rng.random(size)


def _normal(rng: np.random.Generator, size: int, mean: float, std: float) -> np.ndarray:
    u = rng.random(size)
    # ndtri(0) is -inf; PCG64 doubles can hit exactly 0 with probability 2**-53
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return mean + std * ndtri(u)


# A cell spec is ("N", mean, std) or ("U",).
_Cell = tuple


def _draw_blocks(rng: np.random.Generator, blocks: Sequence[Sequence[_Cell]], block_size: int) -> np.ndarray:
    cols = len(blocks[0])
    out = np.empty((block_size * len(blocks), cols))
    for b, row in enumerate(blocks):
        rows = slice(b * block_size, (b + 1) * block_size)
        for j, cell in enumerate(row):
            if cell[0] == "N":
                out[rows, j] = _normal(rng, block_size, cell[1], cell[2])
            else:
                out[rows, j] = _uniform(rng, block_size)
    return out


_N0 = ("N", 0.0, 0.5)
_U = ("U",)

SYNTHETIC1_CELLS = (
    (_N0, _N0, _U, _U, _U, _U),
    (_U, _U, _N0, _N0, _U, _U),
    (_U, _U, _U, _U, _N0, _N0),
)

SYNTHETIC3_CELLS = (
    (("N", 0.0, 0.5), ("N", -5.0, 0.5), _U, _U),
    (_U, _U, ("N", 0.0, 0.5), ("N", 0.0, 0.5)),
    (_U, ("N", 0.0, 0.5), ("N", -5.0, 0.5), _U),
    (("N", 5.0, 0.5), _U, _U, ("N", -5.0, 0.5)),
)


def _synthetic1_from(rng: np.random.Generator) -> np.ndarray:
    return _draw_blocks(rng, SYNTHETIC1_CELLS, 100)


def generate_synthetic1(seed: int) -> Dataset:
    """300 x 6, three classes of 100; each class is compact in its own pair of features."""
    rng = np.random.default_rng(seed)
    X = _synthetic1_from(rng)
    y = np.repeat([1, 2, 3], 100)
    return Dataset(X, y, _names(6), 3)


def generate_synthetic2(seed: int) -> Dataset:
    """Synthetic1 plus x7, x8: noisy copies of x1, x2 for class 1, uniform otherwise.

    Columns 1-6 are the Synthetic1 realization for the same seed; the extra
    draws continue on the same generator afterwards.
    """
    rng = np.random.default_rng(seed)
    X6 = _synthetic1_from(rng)
    extra = np.empty((300, 2))
    for j, src in enumerate((0, 1)):
        extra[:100, j] = X6[:100, src] + _normal(rng, 100, 0.0, 0.1)
    for j in range(2):
        extra[100:200, j] = _uniform(rng, 100)
    for j in range(2):
        extra[200:300, j] = _uniform(rng, 100)
    X = np.hstack([X6, extra])
    y = np.repeat([1, 2, 3], 100)
    return Dataset(X, y, _names(8), 3)


def generate_synthetic3(seed: int) -> Dataset:
    """400 x 4, two classes, each made of two clusters living in different feature pairs."""
    rng = np.random.default_rng(seed)
    X = _draw_blocks(rng, SYNTHETIC3_CELLS, 100)
    y = np.repeat([1, 2], 200)
    return Dataset(X, y, _names(4), 2)


GENERATORS = {
    "synthetic1": generate_synthetic1,
    "synthetic2": generate_synthetic2,
    "synthetic3": generate_synthetic3,
}


def holdout_split(d: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified seeded split; returns (train, test) with ``fraction`` of each class held out."""
    if not 0.0 < fraction < 1.0:
        raise DatasetError("holdout fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test = []
    for k in range(1, d.C + 1):
        idx = np.flatnonzero(d.labels == k)
        m = int(round(fraction * len(idx)))
        m = min(max(m, 1), len(idx) - 1) if len(idx) > 1 else 0
        test.extend(rng.permutation(idx)[:m].tolist())
    mask = np.zeros(d.n, dtype=bool)
    mask[test] = True
    return d.subset(~mask), d.subset(mask)


def load_csv(path: str | os.PathLike, label_column: str | int = -1, has_header: bool = True) -> Dataset:
    """Read a CSV of numeric features plus one label column.

    ``label_column`` is a header name or a (possibly negative) column index.
    Integer labels are taken as given (must be 1..C); any non-integer label
    makes the whole column categorical, mapped to 1..C in order of first
    appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if has_header:
        if not rows:
            raise DatasetError(f"{path}: empty file")
        header, rows = rows[0], rows[1:]
    else:
        header = None
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    width = len(header) if header is not None else len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            line = i + 2 if has_header else i + 1
            raise DatasetError(f"{path}: line {line} has {len(r)} columns, expected {width}")

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None or label_column not in header:
            raise DatasetError(f"label column {label_column!r} not found")
        lab = header.index(label_column)
    else:
        lab = int(label_column)
        if not -width <= lab < width:
            raise DatasetError(f"label column index {lab} out of range for {width} columns")
        lab %= width
    feat_cols = [c for c in range(width) if c != lab]
    if header is not None:
        names = [header[c].strip() for c in feat_cols]
    else:
        names = [f"x{j + 1}" for j in range(len(feat_cols))]

    X = np.empty((len(rows), len(feat_cols)))
    for i, r in enumerate(rows):
        for jj, c in enumerate(feat_cols):
            cell = r[c].strip()
            try:
                X[i, jj] = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: non-numeric feature value {cell!r} at data row {i + 1}, column {names[jj]!r}"
                ) from None

    raw = [r[lab].strip() for r in rows]
    try:
        y = np.array([int(s) for s in raw])
    except ValueError:
        mapping: dict[str, int] = {}
        for s in raw:
            mapping.setdefault(s, len(mapping) + 1)
        y = np.array([mapping[s] for s in raw])
    return Dataset(X, y, tuple(names), int(y.max()))


def save_csv(d: Dataset, path: str | os.PathLike, label_name: str = "y") -> None:
    """Write header + rows; floats use ``repr`` (shortest round-trip form)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*d.feature_names, label_name])
        for row, label in zip(d.features, d.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
