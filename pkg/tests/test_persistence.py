import math
from collections import Counter

import numpy as np
import pytest

from coverage_ph.filtration import assemble_filtration, build_filtration
from coverage_ph.ingest import Facility, Kind
from coverage_ph.persistence import (
    INF,
    compute_diagram,
    compute_h0,
    compute_h1,
    extract_death_simplices,
    reduce_boundary_matrix,
)
from coverage_ph.traveltime import DissimilarityMatrix

from oracles import kruskal_forest_weights, naive_pairs, random_metric

R2 = math.sqrt(2)
SQUARE = [[0, 1, R2, 1], [1, 0, 1, R2], [R2, 1, 0, 1], [1, R2, 1, 0]]


def filtration_of(dense):
    return build_filtration(DissimilarityMatrix.from_dense(dense))


def test_two_points():
    f = filtration_of([[0, 10], [10, 0]])
    pairs = compute_h0(f)
    finite = [p for p in pairs if not p.is_essential]
    assert [(p.birth, p.death, p.death_simplex) for p in finite] == [(0.0, 10.0, (0, 1))]
    assert sum(p.is_essential for p in pairs) == 1


def test_isolated_points_all_essential():
    f = assemble_filtration(5, [])
    pairs = compute_h0(f)
    assert len(pairs) == 5 and all(p.death == INF for p in pairs)


def test_elder_rule_younger_vertex_dies():
    # 2 joins 1 first, then {1,2} meets {0}: the class born at vertex 1 dies
    f = filtration_of([[0, 5, 9], [5, 0, 1], [9, 1, 0]])
    finite = sorted((p.death, p.birth_simplex) for p in compute_h0(f) if not p.is_essential)
    assert finite == [(1.0, (2,)), (5.0, (1,))]


@pytest.mark.parametrize("seed", range(25))
def test_h0_deaths_are_mst_weights(seed):
    rng = np.random.default_rng(seed)
    d = random_metric(rng, int(rng.integers(2, 15)), complete=seed % 3 != 0, keep=0.4)
    pairs = compute_h0(filtration_of(d))
    assert sorted(p.death for p in pairs if not p.is_essential) == kruskal_forest_weights(d)
    assert len(pairs) == len(d)
    assert all(p.birth == 0.0 and p.death >= p.birth for p in pairs)


def test_square_has_one_persistent_loop():
    h1 = compute_h1(filtration_of(SQUARE))
    assert len(h1) == 1
    (p,) = h1
    assert p.birth == pytest.approx(1.0, abs=1e-9)
    assert p.death == pytest.approx(R2, abs=1e-9)
    assert len(p.death_simplex) == 3 and len(p.birth_simplex) == 2


def test_square_diagonal_pair_kept_on_request():
    h1 = compute_h1(filtration_of(SQUARE), keep_diagonal=True)
    assert sorted((p.birth, p.death) for p in h1) == [(1.0, R2), (R2, R2), (R2, R2)]


def test_tree_has_no_cycles():
    m = DissimilarityMatrix(tuple("abcd"), {(0, 1): 1.0, (1, 2): 2.0, (1, 3): 3.0})
    assert compute_h1(build_filtration(m)) == []


def test_sparse_cycle_is_essential():
    # a 4-cycle with no diagonals never gets filled
    m = DissimilarityMatrix(tuple("abcd"), {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (0, 3): 2.0})
    (p,) = compute_h1(build_filtration(m))
    assert p.is_essential and p.birth == 2.0 and p.death_simplex is None


def test_reduce_empty():
    r = reduce_boundary_matrix([])
    assert r.pairs == [] and r.essential == []


def test_single_triangle_hand_reduction():
    # order: v0 v1 v2 | e01 e02 e12 | t012
    #   0  1  2    3   4   5     6
    columns = [[], [], [], [0, 1], [0, 2], [1, 2], [3, 4, 5]]
    # by hand: e01 kills v1, e02 kills v2, e12 = e01 + e02 is a cycle, t012 fills it
    expected_pairs = [(1, 3), (2, 4), (5, 6)]
    for clearing in (True, False):
        r = reduce_boundary_matrix(columns, clearing=clearing)
        assert r.pairs == expected_pairs
        assert r.essential == [0]


@pytest.mark.parametrize("seed", range(30))
def test_clearing_matches_naive_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    f = filtration_of(random_metric(rng, int(rng.integers(3, 11))))
    oracle_pairs, oracle_essential = naive_pairs([s.vertices for s in f.simplices])
    cols = f.boundary_columns()
    for clearing in (True, False):
        r = reduce_boundary_matrix(cols, clearing=clearing)
        assert set(r.pairs) == oracle_pairs
        assert r.essential == oracle_essential


@pytest.mark.parametrize("seed", range(10))
def test_h0_union_find_agrees_with_reduction(seed):
    rng = np.random.default_rng(seed)
    f = filtration_of(random_metric(rng, 9, complete=False))
    r = reduce_boundary_matrix(f.boundary_columns())
    from_reduction = {(b, d) for b, d in r.pairs if f.simplices[b].dim == 0}
    from_uf = {(p.birth_simplex[0], f.index[p.death_simplex]) for p in compute_h0(f) if not p.is_essential}
    assert from_uf == from_reduction


@pytest.mark.parametrize("seed", range(10))
def test_permuting_input_keeps_pair_values(seed):
    rng = np.random.default_rng(seed)
    d = random_metric(rng, 10, complete=seed % 2 == 0)
    perm = rng.permutation(len(d))
    dp = d[np.ix_(perm, perm)]

    def values(dense):
        diag = compute_diagram(DissimilarityMatrix.from_dense(dense))
        return Counter((p.dim, p.birth, p.death) for p in diag.pairs)

    assert values(d) == values(dp)


def test_pair_count_conservation():
    d = random_metric(np.random.default_rng(7), 12, complete=False, keep=0.2)
    diag = compute_diagram(DissimilarityMatrix.from_dense(d))
    h0 = diag.of_dim(0)
    n_components = sum(p.is_essential for p in h0)
    assert len(h0) == 12
    assert len([p for p in h0 if not p.is_essential]) == 12 - n_components


def test_diagram_summary_and_mean():
    diag = compute_diagram(DissimilarityMatrix.from_dense(SQUARE), "square")
    s = diag.summary()
    assert s["h0_pairs"] == 4 and s["h1_pairs"] == 1 and s["h0_essential"] == 1
    assert diag.mean_death(0) == pytest.approx(1.0)
    assert diag.mean_death(None) == pytest.approx((3 + R2) / 4)
    assert diag.connectivity_horizon == 1.0
    again = compute_diagram(DissimilarityMatrix.from_dense(SQUARE), "square")
    assert again.mean_death(None) == diag.mean_death(None)


def _square_facilities():
    return [Facility(f"s{i}", "", Kind.FQHC, float(i), float(-i), "X") for i in range(4)]


def test_extract_death_simplices():
    diag = compute_diagram(DissimilarityMatrix.from_dense(SQUARE))
    facs = _square_facilities()
    everything = extract_death_simplices(diag.pairs, facs, 0.0)
    assert len(everything) == len([p for p in diag.pairs if not p.is_essential])
    assert [f.death for f in everything] == sorted((f.death for f in everything), reverse=True)
    assert extract_death_simplices(diag.pairs, facs, 10.0) == []
    (loop,) = extract_death_simplices(diag.pairs, facs, 1.2)
    assert loop.dim == 1 and loop.birth == 1.0 and loop.death == pytest.approx(R2)
    assert loop.coords == tuple(facs[int(i[1])].latlon for i in loop.ids)
