"""Pearson correlations, globally and within each class."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dataset import Dataset

VARIANCE_EPS = 1e-24


class PearsonResult(NamedTuple):
    rho: float
    degenerate: bool


def pearson(a, b) -> PearsonResult:
    """Sample Pearson coefficient; (0, True) if either variance is below 1e-24."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"pearson needs two equal-length vectors, got {a.shape} and {b.shape}")
    if len(a) < 2:
        raise ValueError("pearson needs at least two observations")
    da = a - a.mean()
    db = b - b.mean()
    va = np.dot(da, da) / (len(a) - 1)
    vb = np.dot(db, db) / (len(b) - 1)
    if va < VARIANCE_EPS or vb < VARIANCE_EPS:
        return PearsonResult(0.0, True)
    r = np.dot(da, db) / np.sqrt(np.dot(da, da) * np.dot(db, db))
    return PearsonResult(float(np.clip(r, -1.0, 1.0)), False)


def correlation_matrix(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P x P Pearson matrix and a per-feature degeneracy flag.

    Degenerate (near-constant) features get 0 against everything, including
    themselves.
    """
    X = np.asarray(X, dtype=np.float64)
    if len(X) < 2:
        raise ValueError("need at least two rows")
    D = X - X.mean(axis=0)
    var = np.einsum("ij,ij->j", D, D) / (len(X) - 1)
    degenerate = var < VARIANCE_EPS
    norm = np.sqrt(np.einsum("ij,ij->j", D, D))
    norm = np.where(degenerate, 1.0, norm)
    Z = D / norm
    R = Z.T @ Z
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    R[degenerate, :] = 0.0
    R[:, degenerate] = 0.0
    return np.clip(R, -1.0, 1.0), degenerate


@dataclass(frozen=True)
class CorrelationSet:
    global_rho: np.ndarray
    class_rho: np.ndarray  # (C, P, P)
    global_degenerate: np.ndarray
    class_degenerate: np.ndarray  # (C, P)

    def to_csv(self, directory: str | Path, feature_names) -> list[Path]:
        """Dump each matrix as CSV; returns written paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        mats = [("global", self.global_rho)] + [
            (f"class{k + 1}", m) for k, m in enumerate(self.class_rho)
        ]
        for name, mat in mats:
            p = directory / f"rho_{name}.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["", *feature_names])
                for fname, row in zip(feature_names, mat):
                    w.writerow([fname, *(repr(float(v)) for v in row)])
            written.append(p)
        return written


def correlation_set(d: Dataset) -> CorrelationSet:
    """Global matrix over all rows and one matrix per class over that class's rows."""
    g, gdeg = correlation_matrix(d.features)
    mats, degs = [], []
    for k in range(1, d.C + 1):
        rows = d.class_rows(k)
        if len(rows) < 2:
            raise ValueError(f"class {k} has {len(rows)} instance(s); correlations need at least 2")
        m, deg = correlation_matrix(rows)
        mats.append(m)
        degs.append(deg)
    return CorrelationSet(g, np.array(mats), gdeg, np.array(degs))
