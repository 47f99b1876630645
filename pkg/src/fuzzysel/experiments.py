"""Presets and a runner for the three synthetic-data experiments.

Run ``r`` of a preset uses seed ``base_seed + r`` for data generation,
clustering, modulator initialisation and training, so any single run can be
reproduced on its own.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .dataset import GENERATORS, Dataset
from .loss import write_trace
from .modulators import DEFAULT_INIT_NOISE, DEFAULT_THRESHOLD, Granularity, constant_bank, init_bank
from .report import SelectionReport, build_selection_report, markdown_table
from .rulebase import build_rulebase
from .stats import correlation_set
from .trainer import TrainConfig, TrainedModel, train

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Mode:
    """One model variant within an experiment.  ``granularity=None`` means all features, untrained."""

    label: str
    granularity: Granularity | None
    c1: float = 1.0
    c2: float = 0.0

    @property
    def slug(self) -> str:
        return self.label.lower().replace(" ", "_").replace("-", "_")


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    dataset: str
    modes: tuple[Mode, ...]
    rules_per_class: int = 1
    runs: int = 5
    base_seed: int = 0
    spread_policy: str = "cluster"
    spread_floor: float = 0.25
    init_noise: float = DEFAULT_INIT_NOISE
    threshold: float = DEFAULT_THRESHOLD
    learning_rate: float = 0.2
    max_iters: int = 2000
    tolerance: float = 1e-9
    normalize_ecl: bool = True

    def generator(self) -> Callable[[int], Dataset]:
        return GENERATORS[self.dataset]

    def hyperparameters(self, mode: Mode) -> dict:
        return {
            "experiment": self.name,
            "dataset": self.dataset,
            "mode": mode.label,
            "rules_per_class": self.rules_per_class,
            "c1": mode.c1,
            "c2": mode.c2,
            "spread_policy": self.spread_policy,
            "spread_floor": self.spread_floor,
            "init_noise": self.init_noise,
            "threshold": self.threshold,
            "learning_rate": self.learning_rate,
            "max_iters": self.max_iters,
            "tolerance": self.tolerance,
            "normalize_ecl": self.normalize_ecl,
        }


PRESETS: dict[str, ExperimentPreset] = {
    "exp1": ExperimentPreset(
        name="exp1",
        dataset="synthetic1",
        modes=(
            Mode("class-specific", Granularity.CLASS, c1=5.0),
            Mode("global", Granularity.GLOBAL, c1=5.0),
            Mode("all features", None),
        ),
        spread_floor=0.25,
    ),
    "exp2": ExperimentPreset(
        name="exp2",
        dataset="synthetic2",
        modes=(
            Mode("Without redundancy control", Granularity.CLASS, c1=1.0, c2=0.0),
            Mode("With class-specific redundancy control", Granularity.CLASS, c1=1.0, c2=15.0),
        ),
        spread_floor=0.25,
    ),
    "exp3": ExperimentPreset(
        name="exp3",
        dataset="synthetic3",
        modes=(
            Mode("rule-specific", Granularity.RULE, c1=0.25),
            Mode("class-specific", Granularity.CLASS, c1=0.25),
            Mode("all features", None),
        ),
        rules_per_class=2,
        spread_floor=0.15,
    ),
}


@dataclass
class RunResult:
    mode: Mode
    run: int
    seed: int
    report: SelectionReport | None = None
    model: TrainedModel | None = None
    error: str | None = None
    seconds: float = 0.0


@dataclass
class ExperimentResult:
    preset: ExperimentPreset
    results: list[RunResult] = field(default_factory=list)

    def for_mode(self, label: str) -> list[RunResult]:
        return [r for r in self.results if r.mode.label == label]

    def mean_accuracy(self, label: str) -> float:
        accs = [r.report.accuracy for r in self.for_mode(label) if r.report is not None]
        return float(np.mean(accs)) if accs else float("nan")

    @property
    def failures(self) -> list[RunResult]:
        return [r for r in self.results if r.error is not None]

    def summary_rows(self) -> tuple[list[str], list[list]]:
        header = ["Run"]
        for m in self.preset.modes:
            if m.granularity is not None:
                header.append(f"{m.label}: selected")
            header.append(f"{m.label}: acc (%)")
        rows = []
        for run in range(self.preset.runs):
            row: list = [run + 1]
            for m in self.preset.modes:
                res = next(r for r in self.for_mode(m.label) if r.run == run)
                if res.report is None:
                    cells = ["FAILED", "FAILED"] if m.granularity is not None else ["FAILED"]
                else:
                    cells = [f"{100 * res.report.accuracy:.2f}"]
                    if m.granularity is not None:
                        sel = "; ".join(
                            f"{scope}: {','.join(v) if v else '-'}" for scope, v in res.report.subsets.items()
                        )
                        cells.insert(0, sel)
                row.extend(cells)
            rows.append(row)
        avg: list = ["avg"]
        for m in self.preset.modes:
            if m.granularity is not None:
                avg.append("")
            avg.append(f"{100 * self.mean_accuracy(m.label):.2f}")
        rows.append(avg)
        return header, rows

    def markdown(self) -> str:
        header, rows = self.summary_rows()
        lines = [
            f"# {self.preset.name} on {self.preset.dataset}",
            "",
            "Accuracy is resubstitution accuracy on the training data.",
            "",
            markdown_table(header, rows),
        ]
        if self.failures:
            lines += ["", "Failed runs:"]
            lines += [f"- {r.mode.label} run {r.run + 1}: {r.error}" for r in self.failures]
        return "\n".join(lines) + "\n"

    def summary_json(self) -> dict:
        return {
            "preset": {**asdict(self.preset), "modes": [
                {"label": m.label, "granularity": m.granularity.value if m.granularity else "none",
                 "c1": m.c1, "c2": m.c2} for m in self.preset.modes
            ]},
            "mean_accuracy": {m.label: self.mean_accuracy(m.label) for m in self.preset.modes},
            "runs": [
                {
                    "mode": r.mode.label,
                    "run": r.run + 1,
                    "seed": r.seed,
                    "accuracy": None if r.report is None else r.report.accuracy,
                    "subsets": None if r.report is None else r.report.subsets,
                    "error": r.error,
                }
                for r in self.results
            ],
        }

    def write(self, out_dir: str | Path) -> list[Path]:
        """Write summary.md, summary.csv, summary.json, per-run JSON reports and trace CSVs."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        header, rows = self.summary_rows()
        p = out / "summary.md"
        p.write_text(self.markdown())
        written.append(p)
        p = out / "summary.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        written.append(p)
        p = out / "summary.json"
        p.write_text(json.dumps(self.summary_json(), indent=2, sort_keys=True) + "\n")
        written.append(p)
        for r in self.results:
            stem = f"{r.mode.slug}_run{r.run + 1}"
            if r.report is not None:
                p = out / "runs" / f"{stem}.json"
                r.report.save(p)
                written.append(p)
            if r.model is not None and r.model.trace:
                p = out / "traces" / f"{stem}.csv"
                write_trace(p, r.model.trace)
                written.append(p)
        return written


def run_single(preset: ExperimentPreset, mode: Mode, run: int) -> RunResult:
    seed = preset.base_seed + run
    t0 = time.perf_counter()
    res = RunResult(mode, run, seed)
    try:
        d = preset.generator()(seed)
        rb = build_rulebase(
            d, preset.rules_per_class, seed,
            floor_fraction=preset.spread_floor, spread_policy=preset.spread_policy,
        )
        if mode.granularity is None:
            bank = constant_bank(Granularity.GLOBAL, rb.rules_per_class, d.P, 0.0)
            model = TrainedModel(rb, bank)
        else:
            bank = init_bank(mode.granularity, rb.rules_per_class, d.P, seed, noise=preset.init_noise)
            cfg = TrainConfig(
                learning_rate=preset.learning_rate,
                max_iters=preset.max_iters,
                tolerance=preset.tolerance,
                c1=mode.c1,
                c2=mode.c2,
                seed=seed,
                normalize_ecl=preset.normalize_ecl,
            )
            corr = correlation_set(d) if mode.c2 > 0 else None
            model = train(rb, bank, d, cfg, corr)
        res.model = model
        res.report = build_selection_report(
            model, d, preset.threshold,
            run_seed=seed,
            label=None if mode.granularity is not None else "none",
            hyperparameters=preset.hyperparameters(mode),
        )
    except Exception as exc:  # recorded in the summary, never dropped
        log.exception("%s / %s run %d failed", preset.name, mode.label, run + 1)
        res.error = f"{type(exc).__name__}: {exc}"
    res.seconds = time.perf_counter() - t0
    return res


def run_experiment(preset: ExperimentPreset | str, runs: int | None = None, base_seed: int | None = None) -> ExperimentResult:
    """Run every mode of ``preset`` for each seed; failures are kept as error rows."""
    if isinstance(preset, str):
        try:
            preset = PRESETS[preset]
        except KeyError:
            raise ValueError(f"unknown experiment {preset!r}; expected one of {sorted(PRESETS)}") from None
    overrides = {}
    if runs is not None:
        overrides["runs"] = runs
    if base_seed is not None:
        overrides["base_seed"] = base_seed
    if overrides:
        preset = replace(preset, **overrides)
    result = ExperimentResult(preset)
    for run in range(preset.runs):
        for mode in preset.modes:
            r = run_single(preset, mode, run)
            log.info("%s %s run %d: %s (%.2fs)", preset.name, mode.label, run + 1,
                     "error" if r.error else f"acc={r.report.accuracy:.4f}", r.seconds)
            result.results.append(r)
    return result
