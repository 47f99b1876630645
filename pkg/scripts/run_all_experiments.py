"""Run the three synthetic experiments and write their tables under results/.

    python3 scripts/run_all_experiments.py [--runs 5] [--seed 0] [--out results]
"""

import argparse
import sys
import time
from pathlib import Path

from fuzzysel.experiments import PRESETS, run_experiment


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")
    p.add_argument("names", nargs="*", default=sorted(PRESETS))
    args = p.parse_args()
    failed = 0
    for name in args.names:
        t0 = time.perf_counter()
        res = run_experiment(name, runs=args.runs, base_seed=args.seed)
        res.write(Path(args.out) / name)
        print(res.markdown())
        print(f"({name}: {time.perf_counter() - t0:.1f}s)\n")
        failed += len(res.failures)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
