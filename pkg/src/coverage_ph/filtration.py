"""Sparse Vietoris-Rips filtration up to triangles.

Filtration values are dissimilarities themselves (diameter convention): an
edge enters at ``d(x, y)`` and a triangle at its longest edge. A radius
parameter ``r`` with ``d < 2r`` corresponds to ``value * RADIUS_PER_VALUE``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence, TextIO

from .traveltime import DissimilarityMatrix

RADIUS_PER_VALUE = 0.5


@dataclass(frozen=True)
class Simplex:
    vertices: tuple[int, ...]
    value: float

    def __post_init__(self):
        if not 1 <= len(self.vertices) <= 3:
            raise ValueError("only vertices, edges and triangles are supported")
        if any(a >= b for a, b in zip(self.vertices, self.vertices[1:])):
            raise ValueError(f"vertices must be strictly ascending: {self.vertices}")
        if not self.value >= 0:
            raise ValueError(f"filtration value must be >= 0: {self.value}")

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def faces(self) -> list[tuple[int, ...]]:
        if self.dim == 0:
            return []
        return list(combinations(self.vertices, len(self.vertices) - 1))

    def sort_key(self):
        return (self.value, self.dim, self.vertices)


class FiltrationError(AssertionError):
    """The simplex order violates face closure (a builder bug)."""


@dataclass(frozen=True)
class Filtration:
    n_vertices: int
    simplices: tuple[Simplex, ...]
    index: dict = field(repr=False, compare=False)

    def __len__(self):
        return len(self.simplices)

    def of_dim(self, dim: int) -> list[Simplex]:
        return [s for s in self.simplices if s.dim == dim]

    def boundary_columns(self) -> list[list[int]]:
        """Face positions of every simplex, in filtration order."""
        return [sorted(self.index[f] for f in s.faces()) for s in self.simplices]

    def write_csv(self, stream: TextIO) -> None:
        stream.write("position,dim,vertices,value\n")
        for pos, s in enumerate(self.simplices):
            verts = " ".join(map(str, s.vertices))
            stream.write(f"{pos},{s.dim},{verts},{s.value!r}\n")


def build_edges(matrix: DissimilarityMatrix) -> list[Simplex]:
    return [Simplex((i, j), v) for (i, j), v in sorted(matrix.entries.items())]


def build_triangles(edges: Iterable[Simplex]) -> list[Simplex]:
    """Every triangle whose three edges are all present, valued at its longest edge."""
    weight = {}
    nbrs = defaultdict(set)
    for e in edges:
        a, b = e.vertices
        weight[(a, b)] = e.value
        nbrs[a].add(b)
        nbrs[b].add(a)
    out = []
    for (a, b), w_ab in sorted(weight.items()):
        for c in sorted(nbrs[a] & nbrs[b]):
            if c > b:
                out.append(Simplex((a, b, c), max(w_ab, weight[(a, c)], weight[(b, c)])))
    return out


def check_face_closure(simplices: Sequence[Simplex]) -> None:
    seen = set()
    for pos, s in enumerate(simplices):
        for f in s.faces():
            if f not in seen:
                raise FiltrationError(f"face {f} of {s.vertices} missing before position {pos}")
        seen.add(s.vertices)


def assemble_filtration(
    n_vertices: int, edges: Sequence[Simplex], triangles: Sequence[Simplex] = ()
) -> Filtration:
    vertices = [Simplex((i,), 0.0) for i in range(n_vertices)]
    simplices = sorted([*vertices, *edges, *triangles], key=Simplex.sort_key)
    check_face_closure(simplices)
    index = {s.vertices: pos for pos, s in enumerate(simplices)}
    if len(index) != len(simplices):
        raise FiltrationError("duplicate simplices")
    return Filtration(n_vertices, tuple(simplices), index)


def build_filtration(matrix: DissimilarityMatrix, max_dim: int = 2) -> Filtration:
    edges = build_edges(matrix)
    triangles = build_triangles(edges) if max_dim >= 2 else []
    return assemble_filtration(matrix.n, edges, triangles)
