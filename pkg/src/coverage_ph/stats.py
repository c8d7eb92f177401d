"""Two-sample comparison of death times between scenarios.

Deaths at or below a short threshold are dropped as noise, the rest are
log-transformed, and two one-tailed rank tests ask whether the first
sample is stochastically smaller than the second.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats as sps

DEFAULT_TRIM_MINUTES = 15.0
EXACT_MAX_TOTAL = 20
BM_MIN_RECOMMENDED = 10

LESS = "less"
GREATER = "greater"


@dataclass(frozen=True)
class Sample:
    label: str
    values: tuple[float, ...]
    logged: bool = False

    def __len__(self):
        return len(self.values)

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / len(self.values)


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    alternative: str
    method: str = ""
    warnings: tuple[str, ...] = field(default=())

    __test__ = False  # not a pytest class

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "p_one_tailed": self.p_value,
            "alternative": self.alternative,
        }


def trim_short_deaths(deaths: Sequence[float], threshold: float = DEFAULT_TRIM_MINUTES, label: str = "") -> Sample:
    """Keep deaths strictly above ``threshold`` (order preserved)."""
    kept = tuple(float(d) for d in deaths if d > threshold)
    if not kept:
        raise ValueError(f"no observations above threshold {threshold}")
    return Sample(label, kept)


def log_transform(sample: Sample) -> Sample:
    if any(v <= 0 for v in sample.values):
        raise ValueError("log transform needs strictly positive values")
    return Sample(sample.label, tuple(math.log(v) for v in sample.values), logged=True)


def rank_with_ties(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they occupy."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("cannot rank an empty sequence")
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    ranks = np.empty(x.size, dtype=float)
    start = 0
    m = x.size
    while start < m:
        stop = start + 1
        while stop < m and sorted_x[stop] == sorted_x[start]:
            stop += 1
        # positions start+1 .. stop share their mean
        ranks[order[start:stop]] = (start + 1 + stop) / 2.0
        start = stop
    return ranks


def _values(s) -> np.ndarray:
    return np.asarray(s.values if isinstance(s, Sample) else s, dtype=float)


def _check_alternative(alternative: str) -> str:
    if alternative not in (LESS, GREATER):
        raise ValueError(f"alternative must be {LESS!r} or {GREATER!r}")
    return alternative


@lru_cache(maxsize=None)
def _u_counts(n_a: int, n_b: int) -> tuple[int, ...]:
    """Number of arrangements giving each value of U (0..n_a*n_b) with no ties."""
    # counts[i][j] is the U-distribution polynomial for sizes (i, j)
    prev = [[1] for _ in range(n_b + 1)]
    for i in range(1, n_a + 1):
        cur = [[1]]
        for j in range(1, n_b + 1):
            # last-ranked element is from a (adds j to U) or from b
            from_a = [0] * j + prev[j]
            from_b = cur[j - 1]
            size = i * j + 1
            cur.append([
                (from_a[u] if u < len(from_a) else 0) + (from_b[u] if u < len(from_b) else 0)
                for u in range(size)
            ])
        prev = cur
    return tuple(prev[n_b])


def mann_whitney_one_sided(a, b, alternative: str = LESS) -> TestResult:
    """One-tailed Mann-Whitney U test; U is reported for ``a``.

    ``alternative="less"`` tests whether ``a`` is stochastically smaller than
    ``b``. Small tie-free samples (``n_a + n_b <= 20``) use the exact null
    distribution, everything else the normal approximation with tie and
    continuity corrections.
    """
    alternative = _check_alternative(alternative)
    x, y = _values(a), _values(b)
    n_a, n_b = x.size, y.size
    if n_a < 2 or n_b < 2:
        raise ValueError("Mann-Whitney needs at least 2 observations per sample")
    ranks = rank_with_ties(np.concatenate([x, y]))
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    has_ties = np.unique(ranks).size < ranks.size

    if n_a + n_b <= EXACT_MAX_TOTAL and not has_ties:
        counts = _u_counts(n_a, n_b)
        total = sum(counts)
        k = int(round(u))
        tail = sum(counts[: k + 1]) if alternative == LESS else sum(counts[k:])
        return TestResult("mann-whitney", u, min(1.0, tail / total), alternative, "exact")

    m = n_a + n_b
    _, tie_sizes = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_sizes**3 - tie_sizes)) / (m * (m - 1))
    var = n_a * n_b / 12.0 * ((m + 1) - tie_term)
    if var <= 0:
        raise ValueError("degenerate ranks: every observation is tied")
    mu = n_a * n_b / 2.0
    sd = math.sqrt(var)
    if alternative == LESS:
        p = sps.norm.cdf((u - mu + 0.5) / sd)
    else:
        p = sps.norm.sf((u - mu - 0.5) / sd)
    return TestResult("mann-whitney", u, float(min(1.0, max(0.0, p))), alternative, "normal")


def brunner_munzel_one_sided(a, b, alternative: str = LESS) -> TestResult:
    """One-tailed Brunner-Munzel test with a Satterthwaite t approximation.

    The statistic is positive when ``a`` tends to be smaller than ``b``.
    When both placement variances vanish the samples are either completely
    separated (p is 0 or 1 outright, statistic infinite) or fully tied,
    which is rejected as degenerate.
    """
    alternative = _check_alternative(alternative)
    x, y = _values(a), _values(b)
    n_a, n_b = x.size, y.size
    if n_a < 2 or n_b < 2:
        raise ValueError("Brunner-Munzel needs at least 2 observations per sample")
    notes = ()
    if min(n_a, n_b) < BM_MIN_RECOMMENDED:
        msg = f"Brunner-Munzel with n_a={n_a}, n_b={n_b} is below the recommended {BM_MIN_RECOMMENDED}"
        warnings.warn(msg, stacklevel=2)
        notes = (msg,)

    pooled = rank_with_ties(np.concatenate([x, y]))
    r_a, r_b = pooled[:n_a], pooled[n_a:]
    inner_a, inner_b = rank_with_ties(x), rank_with_ties(y)
    mean_a, mean_b = r_a.mean(), r_b.mean()
    var_a = np.sum((r_a - inner_a - mean_a + (n_a + 1) / 2.0) ** 2) / (n_a - 1)
    var_b = np.sum((r_b - inner_b - mean_b + (n_b + 1) / 2.0) ** 2) / (n_b - 1)
    scale = n_a * var_a + n_b * var_b

    if scale == 0:
        # estimated P(a < b) + P(a = b) / 2
        p_hat = (mean_b - (n_b + 1) / 2.0) / n_a
        if p_hat not in (0.0, 1.0):
            raise ValueError("degenerate ranks: zero placement variance in both samples")
        favours = (p_hat == 1.0) == (alternative == LESS)
        stat = math.inf if p_hat == 1.0 else -math.inf
        return TestResult("brunner-munzel", stat, 0.0 if favours else 1.0, alternative, "separated", notes)

    stat = float(n_a * n_b * (mean_b - mean_a) / ((n_a + n_b) * math.sqrt(scale)))
    df = scale**2 / ((n_a * var_a) ** 2 / (n_a - 1) + (n_b * var_b) ** 2 / (n_b - 1))
    p = sps.t.sf(stat, df) if alternative == LESS else sps.t.cdf(stat, df)
    return TestResult("brunner-munzel", stat, float(min(1.0, max(0.0, p))), alternative, f"t(df={df:.6g})", notes)


@dataclass
class Comparison:
    scenario_a: str
    scenario_b: str
    trim_threshold: float
    raw_a: Sample
    raw_b: Sample
    logged_a: Sample
    logged_b: Sample
    tests: list[TestResult]

    def report(self) -> dict:
        return {
            "scenario_a": self.scenario_a,
            "scenario_b": self.scenario_b,
            "n_a": len(self.raw_a),
            "n_b": len(self.raw_b),
            "trim_threshold": self.trim_threshold,
            "tests": [t.as_dict() for t in self.tests],
            "summary": {
                "mean_raw_a": self.raw_a.mean,
                "mean_raw_b": self.raw_b.mean,
                "mean_log_a": self.logged_a.mean,
                "mean_log_b": self.logged_b.mean,
            },
        }


def compare_deaths(
    deaths_a: Sequence[float],
    deaths_b: Sequence[float],
    label_a: str = "all",
    label_b: str = "fqhc",
    threshold: float = DEFAULT_TRIM_MINUTES,
) -> Comparison:
    """Trim, log and test ``a`` stochastically smaller than ``b`` with both tests."""
    raw_a = trim_short_deaths(deaths_a, threshold, label_a)
    raw_b = trim_short_deaths(deaths_b, threshold, label_b)
    for s in (raw_a, raw_b):
        if len(s) < 2:
            raise ValueError(f"scenario {s.label} has {len(s)} observation(s) above {threshold} min; need 2")
    log_a, log_b = log_transform(raw_a), log_transform(raw_b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tests = [
            mann_whitney_one_sided(log_a, log_b, LESS),
            brunner_munzel_one_sided(log_a, log_b, LESS),
        ]
    return Comparison(label_a, label_b, threshold, raw_a, raw_b, log_a, log_b, tests)
