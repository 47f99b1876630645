"""Feature modulators M(lambda) = exp(-lambda^2) at three granularities."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_INIT_MEAN = 2.0
DEFAULT_INIT_NOISE = 0.1
DEFAULT_THRESHOLD = 0.5


class Granularity(str, enum.Enum):
    GLOBAL = "global"
    CLASS = "class"
    RULE = "rule"

    @classmethod
    def parse(cls, value: "str | Granularity") -> "Granularity":
        if isinstance(value, Granularity):
            return value
        aliases = {
            "global": cls.GLOBAL,
            "class": cls.CLASS,
            "class_specific": cls.CLASS,
            "class-specific": cls.CLASS,
            "rule": cls.RULE,
            "rule_specific": cls.RULE,
            "rule-specific": cls.RULE,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown granularity {value!r}; expected global, class or rule") from None


def modulator_value(lam):
    """exp(-lam^2); works elementwise on arrays."""
    return np.exp(-np.square(lam))


def modulator_derivative(lam):
    """d/dlam exp(-lam^2)."""
    return -2.0 * lam * np.exp(-np.square(lam))


@dataclass(frozen=True)
class ModulatorBank:
    """Modulator parameters.

    ``lambdas`` has shape (P,) for GLOBAL, (C, P) for CLASS and (n_rule, P) for
    RULE.  ``rules_per_class`` ties the bank to a rule base so that rows can be
    routed to rules.
    """

    granularity: Granularity
    lambdas: np.ndarray
    rules_per_class: tuple[int, ...]

    def __post_init__(self) -> None:
        g = Granularity.parse(self.granularity)
        lam = np.array(self.lambdas, dtype=np.float64)
        rpc = tuple(int(v) for v in self.rules_per_class)
        if not rpc or any(v < 1 for v in rpc):
            raise ValueError("every class needs at least one rule")
        expected_rows = {Granularity.CLASS: len(rpc), Granularity.RULE: sum(rpc)}
        if g is Granularity.GLOBAL:
            if lam.ndim != 1:
                raise ValueError(f"global bank needs a 1-D lambda vector, got shape {lam.shape}")
        elif lam.ndim != 2 or lam.shape[0] != expected_rows[g]:
            raise ValueError(
                f"{g.value} bank needs shape ({expected_rows[g]}, P), got {lam.shape}"
            )
        if not np.all(np.isfinite(lam)):
            raise ValueError("lambdas must be finite")
        lam.setflags(write=False)
        object.__setattr__(self, "granularity", g)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "rules_per_class", rpc)

    @property
    def P(self) -> int:
        return self.lambdas.shape[-1]

    @property
    def C(self) -> int:
        return len(self.rules_per_class)

    @property
    def n_rule(self) -> int:
        return sum(self.rules_per_class)

    @property
    def rule_class(self) -> np.ndarray:
        """0-based class index of each rule."""
        return np.repeat(np.arange(self.C), self.rules_per_class)

    def with_lambdas(self, lambdas: np.ndarray) -> "ModulatorBank":
        return ModulatorBank(self.granularity, lambdas, self.rules_per_class)

    def values(self) -> np.ndarray:
        """M(lambda), shaped like ``lambdas``."""
        return modulator_value(self.lambdas)

    def expand(self, arr: np.ndarray | None = None) -> np.ndarray:
        """Broadcast a lambda-shaped array to one row per rule (n_rule, P)."""
        a = self.lambdas if arr is None else arr
        if self.granularity is Granularity.GLOBAL:
            return np.broadcast_to(a, (self.n_rule, self.P)).copy()
        if self.granularity is Granularity.CLASS:
            return a[self.rule_class]
        return np.array(a, copy=True)

    def reduce(self, per_rule: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`expand`: sum an (n_rule, P) array back onto lambda shape."""
        if self.granularity is Granularity.GLOBAL:
            return per_rule.sum(axis=0)
        if self.granularity is Granularity.CLASS:
            out = np.zeros((self.C, self.P))
            np.add.at(out, self.rule_class, per_rule)
            return out
        return per_rule

    def to_json(self) -> dict:
        return {
            "granularity": self.granularity.value,
            "rules_per_class": list(self.rules_per_class),
            "lambdas": self.lambdas.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModulatorBank":
        return cls(Granularity.parse(obj["granularity"]), np.array(obj["lambdas"]), tuple(obj["rules_per_class"]))


def bank_shape(g: Granularity, rules_per_class: Sequence[int], P: int) -> tuple[int, ...]:
    g = Granularity.parse(g)
    if g is Granularity.GLOBAL:
        return (P,)
    if g is Granularity.CLASS:
        return (len(rules_per_class), P)
    return (sum(rules_per_class), P)


def init_bank(
    g: Granularity | str,
    rules_per_class: Sequence[int],
    P: int,
    seed: int,
    noise: float = DEFAULT_INIT_NOISE,
    mean: float = DEFAULT_INIT_MEAN,
) -> ModulatorBank:
    """Every lambda = ``mean`` + N(0, ``noise``), so training starts near rejection."""
    g = Granularity.parse(g)
    shape = bank_shape(g, rules_per_class, P)
    rng = np.random.default_rng(seed)
    lam = mean + noise * rng.standard_normal(shape) if noise > 0 else np.full(shape, float(mean))
    return ModulatorBank(g, lam, tuple(rules_per_class))


def constant_bank(g: Granularity | str, rules_per_class: Sequence[int], P: int, lam: float) -> ModulatorBank:
    g = Granularity.parse(g)
    return ModulatorBank(g, np.full(bank_shape(g, rules_per_class, P), float(lam)), tuple(rules_per_class))


def bank_from_mask(
    g: Granularity | str, rules_per_class: Sequence[int], mask: np.ndarray, off: float = 10.0
) -> ModulatorBank:
    """Lambda 0 (M = 1) where ``mask`` is true and ``off`` (M ~ 0) elsewhere."""
    lam = np.where(np.asarray(mask, dtype=bool), 0.0, float(off))
    return ModulatorBank(Granularity.parse(g), lam, tuple(rules_per_class))


def modulator_row(bank: ModulatorBank, k: int, l: int) -> np.ndarray:
    """M values applied to rule ``l`` of class ``k`` (both 1-based)."""
    if not 1 <= k <= bank.C:
        raise IndexError(f"class {k} out of range 1..{bank.C}")
    if not 1 <= l <= bank.rules_per_class[k - 1]:
        raise IndexError(f"rule {l} out of range for class {k}")
    M = bank.values()
    if bank.granularity is Granularity.GLOBAL:
        return M.copy()
    if bank.granularity is Granularity.CLASS:
        return M[k - 1].copy()
    return M[sum(bank.rules_per_class[: k - 1]) + l - 1].copy()


def selection_mask(bank: ModulatorBank, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """True where M(lambda) >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return bank.values() >= threshold
