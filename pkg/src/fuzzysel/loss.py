"""Training objective: classification error plus selection and redundancy penalties.

    E_tot = E_cl + c1 * E_select + c2 * E_red

E_cl is the raw sum of squared output errors.  E_select pushes every M(lambda)
toward 0 or 1.  E_red penalises jointly selecting correlated features, using the
global correlations for a global bank and the per-class correlations for a
class-specific bank.  Rule-specific banks have no redundancy term.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .dataset import Dataset
from .modulators import Granularity, ModulatorBank, modulator_derivative
from .rulebase import RuleBase, forward
from .stats import CorrelationSet

EPS_RED = 1e-12


class LossError(ValueError):
    pass


@dataclass(frozen=True)
class LossBreakdown:
    e_cl: float
    e_select: float
    e_red: float
    total: float
    c1: float
    c2: float

    def to_json(self) -> dict:
        return asdict(self)


def classification_error(outputs: np.ndarray, targets: np.ndarray) -> float:
    """sum_i sum_k (o_k^i - t_k^i)^2."""
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outputs.shape != targets.shape:
        raise LossError(f"outputs {outputs.shape} and targets {targets.shape} differ in shape")
    return float(np.sum((outputs - targets) ** 2))


def selection_weights(bank: ModulatorBank) -> np.ndarray:
    """Per-lambda weight w such that E_select = sum w * p * (1 - p)."""
    P, C = bank.P, bank.C
    if bank.granularity is Granularity.GLOBAL:
        return np.full(bank.lambdas.shape, 1.0 / P)
    if bank.granularity is Granularity.CLASS:
        return np.full(bank.lambdas.shape, 1.0 / (C * P))
    nk = np.asarray(bank.rules_per_class, dtype=np.float64)[bank.rule_class]
    return np.broadcast_to((1.0 / (C * P * nk))[:, None], bank.lambdas.shape).copy()


def selection_regularizer(bank: ModulatorBank) -> float:
    p = bank.values()
    return float(np.sum(selection_weights(bank) * p * (1.0 - p)))


def selection_gradient(bank: ModulatorBank) -> np.ndarray:
    p = bank.values()
    return selection_weights(bank) * (1.0 - 2.0 * p) * modulator_derivative(bank.lambdas)


def _redundancy_rows(bank: ModulatorBank, corr: CorrelationSet) -> tuple[np.ndarray, np.ndarray]:
    """(rows of p, matching rho^2 matrices) for the bank's granularity."""
    if bank.granularity is Granularity.RULE:
        raise LossError(
            "redundancy control is not defined for rule-specific modulators; use c2 = 0"
        )
    if bank.P < 2:
        raise LossError("redundancy needs at least two features")
    p = bank.values()
    if bank.granularity is Granularity.GLOBAL:
        return p[None, :], (corr.global_rho**2)[None]
    if corr.class_rho.shape[0] != bank.C:
        raise LossError(f"correlation set has {corr.class_rho.shape[0]} classes, bank has {bank.C}")
    return p, corr.class_rho**2


def redundancy_regularizer(bank: ModulatorBank, corr: CorrelationSet, eps: float = 0.0) -> float:
    """Mean over rows of (1/(P(P-1))) sum_{j != m} sqrt(p_j p_m rho_jm^2 + eps)."""
    p, rho2 = _redundancy_rows(bank, corr)
    rows, P = p.shape
    inner = p[:, :, None] * p[:, None, :] * rho2
    q = np.sqrt(inner + eps)
    off = ~np.eye(P, dtype=bool)
    return float(np.sum(q[:, off]) / (rows * P * (P - 1)))


def redundancy_gradient(bank: ModulatorBank, corr: CorrelationSet, eps: float = EPS_RED) -> np.ndarray:
    p, rho2 = _redundancy_rows(bank, corr)
    rows, P = p.shape
    inner = p[:, :, None] * p[:, None, :] * rho2
    q = np.sqrt(inner + eps)
    ratio = p[:, None, :] * rho2 / q
    for r in range(rows):
        np.fill_diagonal(ratio[r], 0.0)
    # each unordered pair appears twice in the ordered sum, which cancels the 1/2 of d sqrt
    dp = ratio.sum(axis=2) / (rows * P * (P - 1))
    return dp.reshape(bank.lambdas.shape) * modulator_derivative(bank.lambdas)


def total_loss(
    rb: RuleBase,
    bank: ModulatorBank,
    d: Dataset,
    corr: CorrelationSet | None = None,
    c1: float = 1.0,
    c2: float = 0.0,
    *,
    normalize_ecl: bool = False,
    routing: np.ndarray | None = None,
    eps_red: float = 0.0,
) -> LossBreakdown:
    """Evaluate every term; the redundancy term is skipped when ``c2 == 0``."""
    if c1 < 0 or c2 < 0:
        raise LossError("c1 and c2 must be non-negative")
    f = forward(rb, bank, d.features, routing)
    e_cl = classification_error(f.outputs, d.targets)
    if normalize_ecl:
        e_cl /= d.n
    e_sel = selection_regularizer(bank)
    if c2 > 0:
        if corr is None:
            raise LossError("c2 > 0 needs a correlation set")
        e_red = redundancy_regularizer(bank, corr, eps_red)
    else:
        e_red = 0.0
    return LossBreakdown(e_cl, e_sel, e_red, e_cl + c1 * e_sel + c2 * e_red, float(c1), float(c2))


TRACE_FIELDS = ("iteration", "e_cl", "e_select", "e_red", "total")


def write_trace(path: str | Path, trace: Iterable[LossBreakdown], start: int = 0) -> None:
    """Write (iteration, e_cl, e_select, e_red, total) rows as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_FIELDS)
        for i, b in enumerate(trace, start=start):
            w.writerow([i, repr(b.e_cl), repr(b.e_select), repr(b.e_red), repr(b.total)])
