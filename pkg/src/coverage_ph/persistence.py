"""0- and 1-dimensional persistent homology over GF(2).

H0 comes from a union-find sweep over the edges (elder rule: on a merge
the component whose oldest vertex is younger dies). H1 comes from the
standard column reduction of the boundary matrix, run with clearing:
triangle columns are reduced first and every edge they pair with is known
to reduce to zero, so it is skipped. Columns are stored as Python ints
used as bitsets, which makes a column addition a single XOR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .filtration import Filtration, build_filtration
from .ingest import Facility
from .traveltime import DissimilarityMatrix

INF = math.inf


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth: float
    death: float
    birth_simplex: tuple[int, ...]
    death_simplex: tuple[int, ...] | None = None

    @property
    def is_essential(self) -> bool:
        return self.death == INF

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class Reduction:
    pairs: list[tuple[int, int]]
    """``(creator position, destroyer position)``, sorted by creator."""
    essential: list[int]


def reduce_boundary_matrix(
    columns: Sequence[Iterable[int]],
    dims: Sequence[int] | None = None,
    clearing: bool = True,
) -> Reduction:
    """Reduce a boundary matrix given as per-column lists of face positions.

    Without clearing columns are processed left to right. With clearing,
    higher dimensions go first and the lows of reduced columns are skipped
    when their own dimension comes up. Both give the same pairing.
    """
    columns = [list(c) for c in columns]
    if dims is None:
        dims = [max(len(c) - 1, 0) for c in columns]
    n = len(columns)
    if clearing:
        order = [j for d in sorted(set(dims), reverse=True) for j in range(n) if dims[j] == d]
    else:
        order = range(n)

    pivot: dict[int, int] = {}
    reduced: dict[int, int] = {}
    cleared: set[int] = set()
    for j in order:
        if j in cleared:
            continue
        col = 0
        for i in columns[j]:
            col ^= 1 << i
        while col:
            low = col.bit_length() - 1
            k = pivot.get(low)
            if k is None:
                pivot[low] = j
                reduced[j] = col
                if clearing:
                    cleared.add(low)
                break
            col ^= reduced[k]

    pairs = sorted(pivot.items())
    paired = set(pivot) | set(pivot.values())
    return Reduction(pairs, [j for j in range(n) if j not in paired])


class _UnionFind:
    """Disjoint sets over vertex indices; the root is always the oldest (smallest) vertex."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> tuple[int, int] | None:
        """Merge; returns ``(survivor, dying)`` roots, or None if already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None
        elder, younger = (ra, rb) if ra < rb else (rb, ra)
        self.parent[younger] = elder
        return elder, younger


def compute_h0(filtration: Filtration) -> list[PersistencePair]:
    """One pair per vertex; finite deaths are the minimum spanning forest weights.

    Zero-length pairs (edges of value 0) are kept so that the pair count
    always equals the number of vertices.
    """
    uf = _UnionFind(filtration.n_vertices)
    pairs = []
    for s in filtration.simplices:
        if s.dim != 1:
            continue
        merged = uf.union(*s.vertices)
        if merged is not None:
            pairs.append(PersistencePair(0, 0.0, s.value, (merged[1],), s.vertices))
    for v in range(filtration.n_vertices):
        if uf.find(v) == v:
            pairs.append(PersistencePair(0, 0.0, INF, (v,), None))
    return pairs


def compute_h1(
    filtration: Filtration, reduction: Reduction | None = None, keep_diagonal: bool = False
) -> list[PersistencePair]:
    """1-cycles: born at an edge, killed by a triangle or never (``inf``).

    Pairs with ``birth == death`` carry no persistence and are dropped
    unless ``keep_diagonal``. Essential classes can only arise when the
    sparse neighbor graph lacks the edges needed to fill a cycle.
    """
    if reduction is None:
        reduction = reduce_boundary_matrix(filtration.boundary_columns())
    simplices = filtration.simplices
    pairs = []
    for b, d in reduction.pairs:
        sb, sd = simplices[b], simplices[d]
        if sb.dim != 1:
            continue
        if sb.value == sd.value and not keep_diagonal:
            continue
        pairs.append(PersistencePair(1, sb.value, sd.value, sb.vertices, sd.vertices))
    for b in reduction.essential:
        sb = simplices[b]
        if sb.dim == 1:
            pairs.append(PersistencePair(1, sb.value, INF, sb.vertices, None))
    return pairs


def _fmean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


@dataclass(frozen=True)
class Diagram:
    scenario: str
    ids: tuple[str, ...]
    pairs: tuple[PersistencePair, ...]

    def of_dim(self, dim: int | None = None) -> list[PersistencePair]:
        return [p for p in self.pairs if dim is None or p.dim == dim]

    def finite_deaths(self, dim: int | None = None) -> list[float]:
        return [p.death for p in self.of_dim(dim) if not p.is_essential]

    def count(self, dim: int) -> int:
        return len(self.of_dim(dim))

    def mean_death(self, dim: int | None = None) -> float:
        """Mean over finite deaths; ``dim=None`` pools H0 and H1."""
        return _fmean(self.finite_deaths(dim))

    @property
    def connectivity_horizon(self) -> float:
        """Largest finite H0 death: the scale at which the last merge happens."""
        deaths = self.finite_deaths(0)
        return max(deaths) if deaths else 0.0

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "n_vertices": len(self.ids),
            "h0_pairs": self.count(0),
            "h0_essential": sum(p.is_essential for p in self.of_dim(0)),
            "h1_pairs": self.count(1),
            "h1_essential": sum(p.is_essential for p in self.of_dim(1)),
            "mean_death_h0": self.mean_death(0),
            "mean_death_h1": self.mean_death(1),
            "mean_death_pooled": self.mean_death(None),
            "connectivity_horizon": self.connectivity_horizon,
        }


def compute_diagram(matrix: DissimilarityMatrix, scenario: str | None = None) -> Diagram:
    filtration = build_filtration(matrix)
    pairs = compute_h0(filtration) + compute_h1(filtration)
    label = scenario if scenario is not None else matrix.scenario.value
    return Diagram(label, matrix.ids, tuple(pairs))


@dataclass(frozen=True)
class DeathFeature:
    dim: int
    birth: float
    death: float
    ids: tuple[str, ...]
    coords: tuple[tuple[float, float], ...]
    """``(lat, lon)`` per vertex of the death simplex."""


def extract_death_simplices(
    pairs: Iterable[PersistencePair], facilities: Sequence[Facility], min_death: float = 0.0
) -> list[DeathFeature]:
    """Death simplices of finite pairs with ``death >= min_death``, longest-lived first.

    ``facilities`` must be in the vertex order of the matrix the pairs came from.
    """
    out = []
    for p in pairs:
        if p.is_essential or p.death < min_death:
            continue
        fs = [facilities[v] for v in p.death_simplex]
        out.append(
            DeathFeature(p.dim, p.birth, p.death, tuple(f.id for f in fs), tuple(f.latlon for f in fs))
        )
    out.sort(key=lambda f: (-f.death, f.dim, f.ids))
    return out
