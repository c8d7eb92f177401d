"""Write a synthetic facilities/counties dataset plus config.toml.

    python3 scripts/make_synthetic_dataset.py out/rand --n 100 --seed 42
    python3 scripts/make_synthetic_dataset.py out/bridge --kind bridged
"""

import argparse

from coverage_ph.ingest import Kind
from coverage_ph.synthetic import bridged_dataset, random_dataset, square_dataset, write_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory")
    ap.add_argument("--kind", choices=["random", "bridged", "square"], default="random")
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pphc-share", type=float, default=0.3)
    ap.add_argument("--k", type=int, default=35)
    args = ap.parse_args()

    if args.kind == "random":
        facilities, counties = random_dataset(args.n, seed=args.seed, pphc_share=args.pphc_share)
    elif args.kind == "bridged":
        facilities, counties = bridged_dataset(seed=args.seed)
    else:
        facilities, counties = square_dataset()
    k = min(args.k, len(facilities) - 1)
    path = write_dataset(args.directory, facilities, counties, k=k)
    n_fqhc = sum(f.kind is Kind.FQHC for f in facilities)
    print(f"{len(facilities)} facilities ({n_fqhc} fqhc), {len(counties)} counties -> {path}")


if __name__ == "__main__":
    main()
