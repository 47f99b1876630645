"""Accuracy, selected-feature subsets and readable rule listings for trained models.

JSON report schema (all keys always present)::

    {
      "granularity": "global" | "class" | "rule" | "none",
      "evaluation": "resubstitution" | "holdout",
      "threshold": float,
      "run_seed": int,
      "feature_names": [str, ...],
      "subsets": {scope: [feature name, ...]},   # scope: "global", "s1".., "s1.r1"..
      "modulator_values": nested list shaped like the lambdas,
      "accuracy": float,
      "per_class_accuracy": [float, ...],
      "confusion": C x C counts, rows = true class, cols = predicted,
      "ties": int,                                # predictions decided by tie-break
      "predictions": [int, ...],
      "final_loss": {e_cl, e_select, e_red, total, c1, c2} | null,
      "iterations": int,
      "hyperparameters": {...}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .modulators import DEFAULT_THRESHOLD, Granularity, selection_mask
from .rulebase import forward, predict_labels
from .trainer import TrainedModel

EVALUATION_NOTE = (
    "accuracy is measured on the training data itself (resubstitution) unless evaluation == 'holdout'"
)


def predictions(model: TrainedModel, d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """(predicted labels, tie flags) for every row of ``d``."""
    f = forward(model.rulebase, model.bank, d.features)
    return predict_labels(f.outputs)


def accuracy(model: TrainedModel, d: Dataset) -> float:
    labels, _ = predictions(model, d)
    return float(np.mean(labels == d.labels))


def confusion(labels_true: np.ndarray, labels_pred: np.ndarray, C: int) -> np.ndarray:
    m = np.zeros((C, C), dtype=np.int64)
    np.add.at(m, (labels_true - 1, labels_pred - 1), 1)
    return m


def subset_scopes(g: Granularity, rules_per_class) -> list[str]:
    if g is Granularity.GLOBAL:
        return ["global"]
    if g is Granularity.CLASS:
        return [f"s{k + 1}" for k in range(len(rules_per_class))]
    return [f"s{k + 1}.r{l + 1}" for k, nk in enumerate(rules_per_class) for l in range(nk)]


def group_subsets(mask: np.ndarray, g: Granularity, rules_per_class, names) -> dict[str, list[str]]:
    """Map each scope to the names of its selected features."""
    rows = np.atleast_2d(mask)
    return {
        scope: [names[j] for j in np.flatnonzero(row)]
        for scope, row in zip(subset_scopes(g, rules_per_class), rows)
    }


@dataclass
class SelectionReport:
    granularity: str
    subsets: dict[str, list[str]]
    modulator_values: np.ndarray
    accuracy: float
    per_class_accuracy: list[float]
    run_seed: int
    feature_names: list[str]
    threshold: float = DEFAULT_THRESHOLD
    evaluation: str = "resubstitution"
    confusion: np.ndarray | None = None
    predictions: np.ndarray | None = None
    ties: int = 0
    final_loss: dict | None = None
    iterations: int = 0
    hyperparameters: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "granularity": self.granularity,
            "evaluation": self.evaluation,
            "evaluation_note": EVALUATION_NOTE,
            "threshold": self.threshold,
            "run_seed": self.run_seed,
            "feature_names": list(self.feature_names),
            "subsets": self.subsets,
            "modulator_values": np.asarray(self.modulator_values).tolist(),
            "accuracy": self.accuracy,
            "per_class_accuracy": list(self.per_class_accuracy),
            "confusion": None if self.confusion is None else self.confusion.tolist(),
            "ties": self.ties,
            "predictions": None if self.predictions is None else [int(v) for v in self.predictions],
            "final_loss": self.final_loss,
            "iterations": self.iterations,
            "hyperparameters": self.hyperparameters,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps() + "\n")


def build_selection_report(
    model: TrainedModel,
    d: Dataset,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    run_seed: int = 0,
    label: str | None = None,
    evaluation: str = "resubstitution",
    hyperparameters: dict | None = None,
) -> SelectionReport:
    """Threshold M(lambda), name the selected features per scope and score ``d``.

    ``label`` overrides the granularity tag, e.g. "none" for the all-features model.
    """
    bank = model.bank
    mask = selection_mask(bank, threshold)
    subsets = group_subsets(mask, bank.granularity, bank.rules_per_class, d.feature_names)
    pred, ties = predictions(model, d)
    conf = confusion(d.labels, pred, d.C)
    per_class = (np.diag(conf) / conf.sum(axis=1)).tolist()
    return SelectionReport(
        granularity=label or bank.granularity.value,
        subsets=subsets,
        modulator_values=bank.values(),
        accuracy=float(np.trace(conf) / conf.sum()),
        per_class_accuracy=[float(v) for v in per_class],
        run_seed=int(run_seed),
        feature_names=list(d.feature_names),
        threshold=float(threshold),
        evaluation=evaluation,
        confusion=conf,
        predictions=pred,
        ties=int(ties.sum()),
        final_loss=model.trace[-1].to_json() if model.trace else None,
        iterations=model.iterations_run,
        hyperparameters=dict(hyperparameters or {}),
    )


def render_rules(model: TrainedModel, threshold: float = DEFAULT_THRESHOLD, feature_names=None) -> str:
    """One line per rule, listing only the antecedents whose modulator passes ``threshold``."""
    rb, bank = model.rulebase, model.bank
    names = list(feature_names) if feature_names is not None else [f"x{j + 1}" for j in range(rb.P)]
    mask = bank.expand(selection_mask(bank, threshold))
    lines = []
    for r, k in enumerate(rb.rule_class):
        l = r - int(rb.class_offsets[k])
        parts = [
            f"{names[j]} is close-to({rb.centers[r, j]:.4g}, {rb.spreads[r, j]:.4g})"
            for j in np.flatnonzero(mask[r])
        ]
        body = " and ".join(parts) if parts else "(no active antecedent)"
        lines.append(f"R{k + 1}.{l + 1}: If {body} then y is {k + 1}")
    return "\n".join(lines)


def _fmt_subsets(subsets: dict[str, list[str]]) -> str:
    return "; ".join(f"{scope}: {','.join(v) if v else '-'}" for scope, v in subsets.items())


def markdown_table(header: list[str], rows: list[list]) -> str:
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(out)
