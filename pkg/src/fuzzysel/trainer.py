"""Analytic gradients, a finite-difference oracle, and full-batch gradient descent on lambda."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .loss import (
    EPS_RED,
    LossBreakdown,
    redundancy_gradient,
    selection_gradient,
    total_loss,
)
from .modulators import Granularity, ModulatorBank, init_bank, modulator_derivative
from .rulebase import RuleBase, build_rulebase, forward
from .stats import CorrelationSet, correlation_set

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    def __init__(self, message: str, snapshot: dict | None = None):
        super().__init__(message)
        self.snapshot = snapshot or {}


@dataclass
class TrainConfig:
    learning_rate: float = 0.2
    max_iters: int = 2000
    tolerance: float = 1e-9
    c1: float = 1.0
    c2: float = 0.0
    seed: int = 0
    normalize_ecl: bool = False
    batch_size: int | None = None
    checkpoint_every: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass
class TrainedModel:
    rulebase: RuleBase
    bank: ModulatorBank
    trace: list[LossBreakdown] = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False
    non_convergence: bool = False


def analytic_gradient(
    rb: RuleBase,
    bank: ModulatorBank,
    d: Dataset,
    corr: CorrelationSet | None = None,
    c1: float = 1.0,
    c2: float = 0.0,
    *,
    normalize_ecl: bool = False,
    routing: np.ndarray | None = None,
    eps_red: float = EPS_RED,
    rows: np.ndarray | None = None,
) -> np.ndarray:
    """dE_tot/dlambda, shaped like ``bank.lambdas``.

    The max over a class's rules is differentiated through the winning rule
    only (lowest index on ties).  d alpha / d lambda = alpha * log mu * dM/dlambda.
    ``rows`` restricts the classification term to a minibatch.
    """
    X, T = (d.features, d.targets) if rows is None else (d.features[rows], d.targets[rows])
    f = forward(rb, bank, X, routing)
    n = len(X)
    dE_do = 2.0 * (f.outputs - T)
    if normalize_ecl:
        dE_do /= n
    # scatter dE/do_k onto the routed rule: G[i, r] = dE/dalpha_ir
    G = np.zeros_like(f.alpha)
    rows = np.repeat(np.arange(n), rb.C)
    np.add.at(G, (rows, f.routing.ravel()), dE_do.ravel())
    G *= f.alpha
    dE_dM = np.einsum("ir,irp->rp", G, f.log_mu)
    grad = bank.reduce(dE_dM * bank.expand(modulator_derivative(bank.lambdas)))
    if c1:
        grad = grad + c1 * selection_gradient(bank)
    if c2:
        if corr is None:
            raise ValueError("c2 > 0 needs a correlation set")
        grad = grad + c2 * redundancy_gradient(bank, corr, eps_red)
    return grad


def finite_difference_gradient(
    rb: RuleBase,
    bank: ModulatorBank,
    d: Dataset,
    corr: CorrelationSet | None = None,
    c1: float = 1.0,
    c2: float = 0.0,
    h: float = 1e-5,
    *,
    normalize_ecl: bool = False,
    eps_red: float = EPS_RED,
) -> np.ndarray:
    """Central differences of E_tot with rule routing frozen at the base point."""
    if not h > 0:
        raise ValueError("h must be positive")
    routing = forward(rb, bank, d.features).routing
    base = np.array(bank.lambdas)
    grad = np.zeros_like(base)

    def E(lam):
        return total_loss(
            rb, bank.with_lambdas(lam), d, corr, c1, c2,
            normalize_ecl=normalize_ecl, routing=routing, eps_red=eps_red,
        ).total

    for idx in np.ndindex(base.shape):
        up = base.copy()
        dn = base.copy()
        up[idx] += h
        dn[idx] -= h
        grad[idx] = (E(up) - E(dn)) / (2.0 * h)
    return grad


def central_difference(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Generic central-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up = x.copy()
        dn = x.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (fn(up) - fn(dn)) / (2.0 * h)
    return g


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, min_abs: float = 1e-8) -> float:
    """max |a - f| / max(|a|, |f|) over coordinates where either exceeds ``min_abs``."""
    a = np.ravel(analytic)
    f = np.ravel(numeric)
    scale = np.maximum(np.abs(a), np.abs(f))
    keep = scale > min_abs
    if not keep.any():
        return 0.0
    return float(np.max(np.abs(a[keep] - f[keep]) / scale[keep]))


def _checkpoint(path: Path, bank: ModulatorBank, iteration: int) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"iteration": iteration, "bank": bank.to_json()}, indent=2))


def train(
    rb: RuleBase,
    bank: ModulatorBank,
    d: Dataset,
    cfg: TrainConfig,
    corr: CorrelationSet | None = None,
) -> TrainedModel:
    """Gradient descent lambda <- lambda - lr * grad until max_iters or |dE| < tolerance.

    ``trace[t]`` is the loss at the iterate the t-th step starts from.
    """
    if cfg.c2 > 0 and corr is None:
        corr = correlation_set(d)
    lam = np.array(bank.lambdas)
    trace: list[LossBreakdown] = []
    rng = np.random.default_rng(cfg.seed)
    converged = False
    ckpt = Path(cfg.checkpoint_path) if cfg.checkpoint_path else None
    batch = cfg.batch_size if cfg.batch_size and cfg.batch_size < d.n else None
    it = 0
    for it in range(cfg.max_iters):
        cur = bank.with_lambdas(lam)
        lb = total_loss(rb, cur, d, corr, cfg.c1, cfg.c2, normalize_ecl=cfg.normalize_ecl)
        if not np.isfinite(lb.total):
            raise TrainingError(
                f"non-finite loss at iteration {it}",
                {"iteration": it, "bank": cur.to_json(), "loss": lb.to_json()},
            )
        trace.append(lb)
        if len(trace) > 1 and abs(trace[-1].total - trace[-2].total) < cfg.tolerance:
            converged = True
            break
        if batch is None:
            g = analytic_gradient(rb, cur, d, corr, cfg.c1, cfg.c2, normalize_ecl=cfg.normalize_ecl)
            lam = lam - cfg.learning_rate * g
        else:
            order = rng.permutation(d.n)
            for s in range(0, d.n, batch):
                g = analytic_gradient(
                    rb, bank.with_lambdas(lam), d, corr, cfg.c1, cfg.c2,
                    normalize_ecl=cfg.normalize_ecl, rows=np.sort(order[s : s + batch]),
                )
                lam = lam - cfg.learning_rate * g
        if not np.all(np.isfinite(lam)):
            raise TrainingError(
                f"non-finite lambda after iteration {it}",
                {"iteration": it, "bank": cur.to_json(), "loss": lb.to_json()},
            )
        if ckpt is not None and cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
            _checkpoint(ckpt, bank.with_lambdas(lam), it + 1)
    final = bank.with_lambdas(lam) if trace else bank
    non_conv = bool(trace) and trace[-1].total > trace[0].total
    if non_conv:
        log.warning("training ended above its starting loss (%.6g > %.6g)", trace[-1].total, trace[0].total)
    return TrainedModel(rb, final, trace, len(trace), converged, non_conv)


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)


@dataclass
class GradCheck:
    granularity: str
    c2: float
    max_rel_error: float
    tolerance: float
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def random_instance(seed: int, granularity, max_n: int = 20, max_P: int = 5):
    """A small random (rule base, bank, dataset) triple for gradient checks.

    Every class gets at least two rows so per-class correlations exist;
    lambdas are spread over [-2.5, 2.5] so all modulator regimes show up.
    """
    g = Granularity.parse(granularity)
    rng = np.random.default_rng(seed)
    C = int(rng.integers(2, 4))
    P = int(rng.integers(2, max_P + 1))
    n = int(rng.integers(2 * C + 2, max_n + 1))
    labels = np.concatenate([np.repeat(np.arange(1, C + 1), 2), rng.integers(1, C + 1, n - 2 * C)])
    X = rng.normal(size=(n, P)) + labels[:, None] * rng.normal(size=(1, P))
    d = Dataset(X, labels, tuple(f"x{j + 1}" for j in range(P)), C)
    counts = np.bincount(labels - 1)
    rpc = [int(rng.integers(1, min(3, c) + 1)) for c in counts]
    rb = build_rulebase(d, rpc, seed)
    bank = init_bank(g, rpc, P, seed)
    bank = bank.with_lambdas(rng.uniform(-2.5, 2.5, bank.lambdas.shape))
    return rb, bank, d


def gradient_check(seed: int, granularity, c1: float = 1.0, c2: float = 0.0, h: float = 1e-5,
                   tolerance: float = 1e-4) -> GradCheck:
    """Compare analytic and frozen-routing finite-difference gradients on a random instance."""
    rb, bank, d = random_instance(seed, granularity)
    corr = correlation_set(d) if c2 > 0 else None
    a = analytic_gradient(rb, bank, d, corr, c1, c2)
    f = finite_difference_gradient(rb, bank, d, corr, c1, c2, h)
    return GradCheck(bank.granularity.value, c2, max_relative_error(a, f), tolerance, a, f)
