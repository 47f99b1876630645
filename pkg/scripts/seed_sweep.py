"""Count how often each experiment's selection outcome holds across many seeds.

    python3 scripts/seed_sweep.py exp1 --seeds 30
"""

import argparse

from fuzzysel.experiments import run_experiment

TARGETS = {
    "exp1": ("class-specific", lambda s: s == {"s1": ["x1", "x2"], "s2": ["x3", "x4"], "s3": ["x5", "x6"]}),
    "exp2": (
        "With class-specific redundancy control",
        lambda s: len(s["s1"]) == 2
        and ("x1" in s["s1"]) != ("x7" in s["s1"])
        and ("x2" in s["s1"]) != ("x8" in s["s1"]),
    ),
    "exp3": (
        "rule-specific",
        lambda s: {frozenset(s["s1.r1"]), frozenset(s["s1.r2"])} == {frozenset({"x1", "x2"}), frozenset({"x3", "x4"})}
        and {frozenset(s["s2.r1"]), frozenset(s["s2.r2"])} == {frozenset({"x2", "x3"}), frozenset({"x1", "x4"})},
    ),
}


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("name", choices=sorted(TARGETS))
    p.add_argument("--seeds", type=int, default=20)
    args = p.parse_args()
    label, ok = TARGETS[args.name]
    res = run_experiment(args.name, runs=args.seeds, base_seed=0)
    hits = [r.seed for r in res.for_mode(label) if r.report and ok(r.report.subsets)]
    print(f"{args.name} / {label}: {len(hits)}/{args.seeds} seeds recover the target subsets")
    for m in res.preset.modes:
        print(f"  mean accuracy {m.label}: {100 * res.mean_accuracy(m.label):.2f}%")


if __name__ == "__main__":
    main()
