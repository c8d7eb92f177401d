"""Full pipeline on a synthetic dataset: fetch, analyze both scenarios, compare.

    python3 scripts/run_demo.py /tmp/demo --kind bridged
"""

import argparse
import json
import time
from pathlib import Path

from coverage_ph.cli import main as cli
from coverage_ph.synthetic import bridged_dataset, random_dataset, write_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory", type=Path)
    ap.add_argument("--kind", choices=["random", "bridged"], default="bridged")
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.kind == "random":
        facilities, counties = random_dataset(args.n, seed=args.seed)
    else:
        facilities, counties = bridged_dataset(seed=args.seed)
    config = str(write_dataset(args.directory, facilities, counties))

    start = time.perf_counter()
    steps = [
        ["fetch", "--config", config],
        ["analyze", "--config", config, "--scenario", "all"],
        ["analyze", "--config", config, "--scenario", "fqhc"],
        ["compare", "--config", config],
    ]
    for step in steps:
        print("$ coverage-ph", " ".join(step))
        code = cli(step)
        if code:
            raise SystemExit(code)
    report = json.loads((args.directory / "out" / "significance_report.json").read_text())
    for t in report["tests"]:
        print(f"{t['name']:>15}: p = {t['p_one_tailed']:.3g}")
    print(f"done in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
