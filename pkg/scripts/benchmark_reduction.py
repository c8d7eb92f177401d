"""Time the H0/H1 pipeline with and without clearing on random complete metrics."""

import argparse
import time

import numpy as np

from coverage_ph.filtration import build_filtration
from coverage_ph.persistence import compute_h0, reduce_boundary_matrix
from coverage_ph.traveltime import DissimilarityMatrix


def random_metric(rng, n):
    pts = rng.uniform(0, 100, size=(n, 2))
    return np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 60, 80])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"{'n':>4} {'simplices':>10} {'filtration':>11} {'h0':>8} {'clear':>8} {'naive':>8}")
    for n in args.sizes:
        m = DissimilarityMatrix.from_dense(random_metric(rng, n))
        t0 = time.perf_counter()
        f = build_filtration(m)
        cols = f.boundary_columns()
        t1 = time.perf_counter()
        compute_h0(f)
        t2 = time.perf_counter()
        fast = reduce_boundary_matrix(cols, clearing=True)
        t3 = time.perf_counter()
        slow = reduce_boundary_matrix(cols, clearing=False)
        t4 = time.perf_counter()
        assert fast.pairs == slow.pairs
        print(f"{n:>4} {len(f.simplices):>10} {t1 - t0:>10.3f}s {t2 - t1:>7.3f}s {t3 - t2:>7.3f}s {t4 - t3:>7.3f}s")


if __name__ == "__main__":
    main()
