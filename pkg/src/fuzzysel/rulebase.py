"""Fuzzy rule base: per-class k-means rules with Gaussian antecedents.

Firing strengths use the product T-norm over modulated memberships,
alpha = prod_j mu_j ** M_j, evaluated as exp(sum_j M_j * log mu_j).  A class's
support is the max firing strength over its rules.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import Dataset
from .modulators import ModulatorBank

LOG_MU_FLOOR = -700.0
SPREAD_FLOOR_FRACTION = 0.05
MIN_SPREAD = 1e-8
KMEANS_MAX_ITER = 300
SPREAD_POLICIES = ("cluster", "feature")


class RuleBaseError(ValueError):
    pass


@dataclass(frozen=True)
class FuzzySet:
    """Gaussian "close to center" set."""

    center: float
    spread: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.center) and np.isfinite(self.spread) and self.spread > 0):
            raise RuleBaseError(f"invalid fuzzy set ({self.center}, {self.spread})")


@dataclass(frozen=True)
class Rule:
    class_index: int
    antecedents: tuple[FuzzySet, ...]


@dataclass(frozen=True)
class RuleBase:
    """Rules stored as (n_rule, P) center and spread matrices, grouped by class."""

    centers: np.ndarray
    spreads: np.ndarray
    rules_per_class: tuple[int, ...]

    def __post_init__(self) -> None:
        c = np.array(self.centers, dtype=np.float64)
        s = np.array(self.spreads, dtype=np.float64)
        rpc = tuple(int(v) for v in self.rules_per_class)
        if c.ndim != 2 or c.shape != s.shape:
            raise RuleBaseError(f"centers {c.shape} and spreads {s.shape} must be equal 2-D shapes")
        if not rpc or any(v < 1 for v in rpc):
            raise RuleBaseError("every class needs at least one rule")
        if sum(rpc) != c.shape[0]:
            raise RuleBaseError(f"rules_per_class sums to {sum(rpc)} but there are {c.shape[0]} rules")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s)) and np.all(s > 0)):
            raise RuleBaseError("centers must be finite and spreads finite and positive")
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "spreads", s)
        object.__setattr__(self, "rules_per_class", rpc)

    @property
    def n_rule(self) -> int:
        return self.centers.shape[0]

    @property
    def P(self) -> int:
        return self.centers.shape[1]

    @property
    def C(self) -> int:
        return len(self.rules_per_class)

    @property
    def rule_class(self) -> np.ndarray:
        return np.repeat(np.arange(self.C), self.rules_per_class)

    @property
    def class_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.rules_per_class)])

    def rule_index(self, k: int, l: int) -> int:
        """Flat index of rule ``l`` of class ``k`` (both 1-based)."""
        return int(self.class_offsets[k - 1]) + l - 1

    @property
    def rules(self) -> list[Rule]:
        return [
            Rule(int(k) + 1, tuple(FuzzySet(float(v), float(s)) for v, s in zip(self.centers[r], self.spreads[r])))
            for r, k in enumerate(self.rule_class)
        ]

    def to_json(self) -> dict:
        return {
            "rules_per_class": list(self.rules_per_class),
            "centers": self.centers.tolist(),
            "spreads": self.spreads.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RuleBase":
        return cls(np.array(obj["centers"]), np.array(obj["spreads"]), tuple(obj["rules_per_class"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = len(points)
    chosen = [int(rng.integers(m))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(m, p=d2 / total))
        else:
            idx = int(rng.integers(m))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return points[chosen].copy()


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    a = np.argmin(d2, axis=1)
    return a, d2[np.arange(len(points)), a]


def kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = KMEANS_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm from a seeded k-means++ start.

    Empty clusters are reseeded at the point farthest from its current
    centroid.  Stops when assignments no longer change or after ``max_iter``
    iterations.  Returns (centroids, assignments).
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise RuleBaseError("kmeans needs a non-empty 2-D point matrix")
    m = len(X)
    if not 1 <= k <= m:
        raise RuleBaseError(f"cannot form {k} clusters from {m} points")
    if not np.all(np.isfinite(X)):
        raise RuleBaseError("kmeans points must be finite")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(X, k, rng)
    assign, dist = _assign(X, centroids)
    for _ in range(max_iter):
        for c in range(k):
            members = assign == c
            if not members.any():
                far = int(np.argmax(dist))
                centroids[c] = X[far]
                assign[far] = c
                dist[far] = 0.0
            else:
                centroids[c] = X[members].mean(axis=0)
        new_assign, dist = _assign(X, centroids)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centroids, assign


def cluster_spreads(
    members: np.ndarray, floor: np.ndarray
) -> np.ndarray:
    """Per-feature sample std of one cluster's members, floored."""
    if len(members) >= 2:
        sd = members.std(axis=0, ddof=1)
    else:
        sd = np.zeros(members.shape[1])
    return np.maximum(np.maximum(sd, floor), MIN_SPREAD)


def build_rulebase(
    d: Dataset,
    rules_per_class: Sequence[int] | int,
    seed: int,
    floor_fraction: float = SPREAD_FLOOR_FRACTION,
    spread_policy: str = "cluster",
    spread_scale: float = 1.0,
) -> RuleBase:
    """Cluster each class separately; one rule per cluster centroid.

    ``spread_policy="cluster"``: spreads are the within-cluster sample std of
    each feature, floored at ``floor_fraction`` times that feature's range over
    the whole dataset.  ``spread_policy="feature"``: every rule shares the
    spread ``spread_scale`` times the feature's std over the whole dataset.
    """
    if spread_policy not in SPREAD_POLICIES:
        raise RuleBaseError(f"unknown spread policy {spread_policy!r}; expected one of {SPREAD_POLICIES}")
    if isinstance(rules_per_class, (int, np.integer)):
        rules_per_class = [int(rules_per_class)] * d.C
    rpc = tuple(int(v) for v in rules_per_class)
    if len(rpc) != d.C:
        raise RuleBaseError(f"need one rule count per class ({d.C}), got {len(rpc)}")
    floor = floor_fraction * np.ptp(d.features, axis=0)
    centers, spreads = [], []
    for k, nk in enumerate(rpc, start=1):
        pts = d.class_rows(k)
        if len(pts) < nk:
            raise RuleBaseError(f"class {k} has {len(pts)} instances but {nk} rules were requested")
        cents, assign = kmeans(pts, nk, seed + 7919 * k)
        for l in range(nk):
            centers.append(cents[l])
            if spread_policy == "cluster":
                spreads.append(cluster_spreads(pts[assign == l], floor))
            else:
                spreads.append(np.maximum(spread_scale * d.features.std(axis=0, ddof=1), MIN_SPREAD))
    return RuleBase(np.array(centers), np.array(spreads), rpc)


def log_membership(x, center, spread):
    """log of the Gaussian membership, clamped at LOG_MU_FLOOR."""
    z = (np.asarray(x, dtype=np.float64) - center) / spread
    return np.maximum(-0.5 * z * z, LOG_MU_FLOOR)


def membership(x, fs: FuzzySet | None = None, *, center=None, spread=None):
    """exp(-(x - c)^2 / (2 s^2))."""
    if fs is not None:
        center, spread = fs.center, fs.spread
    return np.exp(log_membership(x, center, spread))


def firing_strength(rule: Rule, x: np.ndarray, m_row: np.ndarray) -> float:
    """prod_j mu_j ** m_j for one rule."""
    c = np.array([a.center for a in rule.antecedents])
    s = np.array([a.spread for a in rule.antecedents])
    return float(np.exp(np.dot(m_row, log_membership(x, c, s))))


class Forward(NamedTuple):
    log_mu: np.ndarray  # (n, n_rule, P)
    alpha: np.ndarray  # (n, n_rule)
    outputs: np.ndarray  # (n, C)
    routing: np.ndarray  # (n, C) flat rule index that produced each output


def _check(rb: RuleBase, bank: ModulatorBank, P: int) -> None:
    if bank.rules_per_class != rb.rules_per_class:
        raise RuleBaseError(
            f"bank rules {bank.rules_per_class} do not match rule base {rb.rules_per_class}"
        )
    if bank.P != rb.P or P != rb.P:
        raise RuleBaseError(f"dimension mismatch: rules have P={rb.P}, bank P={bank.P}, input P={P}")


def forward(rb: RuleBase, bank: ModulatorBank, X: np.ndarray, routing: np.ndarray | None = None) -> Forward:
    """Evaluate all rules on a batch.

    With ``routing`` given, each output takes the firing strength of the
    given rule instead of the class max (used to freeze the max branch).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check(rb, bank, X.shape[1])
    log_mu = log_membership(X[:, None, :], rb.centers[None], rb.spreads[None])
    M = bank.expand(bank.values())
    alpha = np.exp(np.einsum("irp,rp->ir", log_mu, M))
    if routing is None:
        off = rb.class_offsets
        routing = np.empty((len(X), rb.C), dtype=np.int64)
        for k in range(rb.C):
            # argmax picks the lowest rule index on ties
            routing[:, k] = off[k] + np.argmax(alpha[:, off[k] : off[k + 1]], axis=1)
    outputs = np.take_along_axis(alpha, routing, axis=1)
    return Forward(log_mu, alpha, outputs, routing)


def classify(rb: RuleBase, bank: ModulatorBank, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Class supports o (length C) and the winning rule within each class (0-based)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise RuleBaseError("classify expects a single feature vector")
    f = forward(rb, bank, x[None])
    return f.outputs[0], f.routing[0] - rb.class_offsets[:-1]


class Prediction(NamedTuple):
    label: int
    tie: bool


def predict_label(o: Sequence[float]) -> Prediction:
    """1-based argmax; ties go to the lowest class index and set ``tie``."""
    o = np.asarray(o, dtype=np.float64)
    k = int(np.argmax(o))
    return Prediction(k + 1, bool(np.count_nonzero(o == o[k]) > 1))


def predict_labels(outputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`predict_label` over rows; returns (labels, tie flags)."""
    outputs = np.asarray(outputs)
    k = np.argmax(outputs, axis=1)
    top = outputs[np.arange(len(outputs)), k]
    ties = np.count_nonzero(outputs == top[:, None], axis=1) > 1
    return k + 1, ties
