"""Command-line entry point.

Subcommands::

    fuzzysel generate synthetic1 --seed 0 --out data.csv
    fuzzysel train --data data.csv --granularity class --c1 5 --out-report report.json
    fuzzysel gradcheck --granularity rule --seed 3
    fuzzysel experiment exp1 --runs 5 --seed 0 --out-dir results/exp1

Any subcommand accepts ``--config FILE``, an INI file whose section named
after the subcommand holds ``key = value`` pairs.  Keys are the long option
names (dashes or underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dataset import GENERATORS, DatasetError, holdout_split, load_csv, save_csv
from .experiments import PRESETS, run_experiment
from .loss import LossError, write_trace
from .modulators import DEFAULT_INIT_NOISE, DEFAULT_THRESHOLD, Granularity, constant_bank, init_bank
from .report import build_selection_report, render_rules
from .rulebase import SPREAD_FLOOR_FRACTION, SPREAD_POLICIES, RuleBaseError, build_rulebase
from .stats import correlation_set
from .trainer import TrainConfig, TrainedModel, TrainingError, gradient_check, train

log = logging.getLogger("fuzzysel")


class CLIError(Exception):
    pass


def _rules_per_class(text: str) -> list[int] | int:
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"rules per class must be an int or comma list, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("rule counts must be positive")
    return vals[0] if len(vals) == 1 else vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fuzzysel", description="Fuzzy rule-based classifier with modulated feature selection.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    g.add_argument("name", choices=sorted(GENERATORS))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--config")

    t = sub.add_parser("train", help="train modulators on one dataset and write a report")
    src = t.add_mutually_exclusive_group()
    src.add_argument("--data", help="CSV file; the label column is chosen by --label-column")
    src.add_argument("--synthetic", choices=sorted(GENERATORS))
    t.add_argument("--label-column", default="-1", help="header name or column index (default: last)")
    t.add_argument("--no-header", action="store_true")
    t.add_argument("--granularity", default="class", choices=["global", "class", "rule", "none"])
    t.add_argument("--rules-per-class", type=_rules_per_class, default=1)
    t.add_argument("--c1", type=float, default=1.0)
    t.add_argument("--c2", type=float, default=0.0)
    t.add_argument("--lr", type=float, default=0.2)
    t.add_argument("--iters", type=int, default=2000)
    t.add_argument("--tolerance", type=float, default=1e-9)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    t.add_argument("--spread-policy", choices=SPREAD_POLICIES, default="cluster")
    t.add_argument("--spread-floor", type=float, default=SPREAD_FLOOR_FRACTION)
    t.add_argument("--spread-scale", type=float, default=1.0)
    t.add_argument("--init-noise", type=float, default=DEFAULT_INIT_NOISE)
    t.add_argument("--raw-ecl", action="store_true", help="use the summed (not per-sample mean) classification error")
    t.add_argument("--batch-size", type=int, default=None)
    t.add_argument("--holdout", type=float, default=None, metavar="FRACTION")
    t.add_argument("--out-report")
    t.add_argument("--trace")
    t.add_argument("--checkpoint")
    t.add_argument("--checkpoint-every", type=int, default=0)
    t.add_argument("--rules-out", help="write the rendered rule listing here")
    t.add_argument("--config")

    gc = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    gc.add_argument("--granularity", default="class", choices=["global", "class", "rule"])
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--c1", type=float, default=1.0)
    gc.add_argument("--c2", type=float, default=None, help="default: 1 for global/class, 0 for rule")
    gc.add_argument("--h", type=float, default=1e-5)
    gc.add_argument("--tolerance", type=float, default=1e-4)
    gc.add_argument("--config")

    e = sub.add_parser("experiment", help="run a preset experiment over several seeds")
    e.add_argument("name", choices=sorted(PRESETS))
    e.add_argument("--runs", type=int, default=None)
    e.add_argument("--seed", type=int, default=None, help="base seed; run r uses seed + r")
    e.add_argument("--out-dir", default=None)
    e.add_argument("--config")
    return p


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        if isinstance(action, argparse._SubParsersAction):  # noqa: SLF001
            return action.choices[name]
    raise KeyError(name)


def apply_config(parser: argparse.ArgumentParser, command: str, path: str) -> None:
    """Load ``[command]`` from an INI file as defaults for that subparser."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise CLIError(f"cannot read config file {path}")
    if not cp.has_section(command):
        return
    sp = _subparser(parser, command)
    actions = {a.dest: a for a in sp._actions}  # noqa: SLF001
    defaults = {}
    for key, raw in cp.items(command):
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("help", "config"):
            raise CLIError(f"unknown key {key!r} in [{command}] of {path}")
        act = actions[dest]
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):  # noqa: SLF001
            defaults[dest] = cp.getboolean(command, key)
        elif act.type is not None:
            try:
                defaults[dest] = act.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise CLIError(f"bad value for {key!r} in {path}: {exc}") from None
        else:
            defaults[dest] = raw
        if act.choices is not None and defaults[dest] not in act.choices:
            raise CLIError(f"{key} must be one of {sorted(act.choices)}, got {raw!r}")
    sp.set_defaults(**defaults)


def cmd_generate(args) -> int:
    d = GENERATORS[args.name](args.seed)
    save_csv(d, args.out)
    print(f"wrote {d.n} x {d.P} ({d.C} classes) to {args.out}")
    return 0


def _load_training_data(args):
    if args.data:
        label = args.label_column
        return load_csv(args.data, label, has_header=not args.no_header)
    if args.synthetic:
        return GENERATORS[args.synthetic](args.seed)
    raise CLIError("train needs --data or --synthetic")


def cmd_train(args) -> int:
    if args.granularity == "rule" and args.c2 > 0:
        raise CLIError(
            "redundancy control (--c2 > 0) is not defined for rule-specific selection; "
            "the rule-specific objective has no redundancy term. Use --c2 0 or another granularity."
        )
    d = _load_training_data(args)
    evaluation, test = "resubstitution", d
    if args.holdout is not None:
        d, test = holdout_split(d, args.holdout, args.seed)
        evaluation = "holdout"
    rb = build_rulebase(
        d, args.rules_per_class, args.seed,
        floor_fraction=args.spread_floor, spread_policy=args.spread_policy, spread_scale=args.spread_scale,
    )
    cfg = TrainConfig(
        learning_rate=args.lr, max_iters=args.iters, tolerance=args.tolerance,
        c1=args.c1, c2=args.c2, seed=args.seed, normalize_ecl=not args.raw_ecl,
        batch_size=args.batch_size, checkpoint_every=args.checkpoint_every, checkpoint_path=args.checkpoint,
    )
    if args.granularity == "none":
        model = TrainedModel(rb, constant_bank(Granularity.GLOBAL, rb.rules_per_class, d.P, 0.0))
    else:
        bank = init_bank(args.granularity, rb.rules_per_class, d.P, args.seed, noise=args.init_noise)
        corr = correlation_set(d) if args.c2 > 0 else None
        model = train(rb, bank, d, cfg, corr)
    hyper = {
        "granularity": args.granularity, "rules_per_class": args.rules_per_class,
        "c1": args.c1, "c2": args.c2, "learning_rate": args.lr, "max_iters": args.iters,
        "tolerance": args.tolerance, "normalize_ecl": not args.raw_ecl, "batch_size": args.batch_size,
        "spread_policy": args.spread_policy, "spread_floor": args.spread_floor,
        "spread_scale": args.spread_scale, "init_noise": args.init_noise,
        "threshold": args.threshold, "seed": args.seed, "holdout": args.holdout,
    }
    rep = build_selection_report(
        model, test, args.threshold, run_seed=args.seed,
        label="none" if args.granularity == "none" else None,
        evaluation=evaluation, hyperparameters=hyper,
    )
    rules = render_rules(model, args.threshold, d.feature_names)
    print(f"accuracy ({evaluation}): {rep.accuracy:.4f}")
    for scope, names in rep.subsets.items():
        print(f"  {scope}: {', '.join(names) if names else '-'}")
    print(rules)
    if args.out_report:
        rep.save(args.out_report)
    if args.trace and model.trace:
        write_trace(args.trace, model.trace)
    if args.rules_out:
        Path(args.rules_out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.rules_out).write_text(rules + "\n")
    return 0


def cmd_gradcheck(args) -> int:
    c2 = args.c2
    if c2 is None:
        c2 = 0.0 if args.granularity == "rule" else 1.0
    if args.granularity == "rule" and c2 > 0:
        raise CLIError("redundancy control is not defined for rule-specific selection; use --c2 0")
    res = gradient_check(args.seed, args.granularity, c1=args.c1, c2=c2, h=args.h, tolerance=args.tolerance)
    print(f"granularity={res.granularity} c2={res.c2} max relative error={res.max_rel_error:.3e}")
    print("PASS" if res.passed else "FAIL")
    return 0 if res.passed else 1


def cmd_experiment(args) -> int:
    res = run_experiment(args.name, runs=args.runs, base_seed=args.seed)
    print(res.markdown())
    if args.out_dir:
        res.write(args.out_dir)
        print(f"wrote results to {args.out_dir}")
    return 1 if res.failures else 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "gradcheck": cmd_gradcheck,
    "experiment": cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            apply_config(parser, args.command, args.config)
            args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except (CLIError, DatasetError, RuleBaseError, LossError, TrainingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
