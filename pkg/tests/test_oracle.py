import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psos.model import GraphModel, RegionCovering, gen_spinglass
from psos.oracle import (
    MAX_EXHAUSTIVE,
    OracleLimitError,
    check_metric_polytope,
    enumerate_chordless_cycles,
    exhaustive_map,
    ratio_to_best,
    triangle_inequalities,
)
from psos.sdp import SolverConfig, moment_matrix, partial_sos

from conftest import brute_map, frustrated_triangle, random_graph


# ---------------------------------------------------------------- exhaustive


def test_exhaustive_single_vertex():
    x, v = exhaustive_map(GraphModel(1, [], [], [-2.0]))
    assert x.tolist() == [-1] and v == 2.0


def test_exhaustive_frustrated_triangle():
    assert exhaustive_map(frustrated_triangle())[1] == 1.0


@pytest.mark.parametrize("use_numba", [True, False])
@pytest.mark.parametrize("seed", range(6))
def test_exhaustive_matches_enumeration(seed, use_numba):
    m = random_graph(np.random.default_rng(seed), 11)
    x, v = exhaustive_map(m, use_numba=use_numba)
    assert v == pytest.approx(brute_map(m)[1], abs=1e-9)
    assert v == pytest.approx(float(np.dot(m.vertex_weights, x)
                                    + sum(w * x[i] * x[j] for (i, j), w in zip(m.edges.tolist(), m.edge_weights))),
                              abs=1e-9)


def test_exhaustive_backends_agree_on_4x4():
    m = gen_spinglass(4, 4, 11)
    a = exhaustive_map(m, use_numba=True)
    b = exhaustive_map(m, use_numba=False)
    assert a[1] == pytest.approx(b[1], abs=1e-12)


def test_exhaustive_limit():
    with pytest.raises(OracleLimitError):
        exhaustive_map(GraphModel(MAX_EXHAUSTIVE + 1, [], [], np.zeros(MAX_EXHAUSTIVE + 1)))


# ---------------------------------------------------------------- cycles


def brute_chordless(model, max_len):
    """Vertex subsets whose induced subgraph is a single cycle."""
    n = model.num_vertices
    adj = {v: set() for v in range(n)}
    for i, j in model.edges.tolist():
        adj[i].add(j)
        adj[j].add(i)
    out = set()
    for k in range(3, max_len + 1):
        for S in itertools.combinations(range(n), k):
            s = set(S)
            if any(len(adj[v] & s) != 2 for v in S):
                continue
            seen, todo = {S[0]}, [S[0]]
            while todo:
                for w in adj[todo.pop()] & s:
                    if w not in seen:
                        seen.add(w)
                        todo.append(w)
            if seen == s:
                out.add(frozenset(S))
    return out


def _check_cycle_shape(model, c):
    edges = {tuple(sorted(e)) for e in model.edges.tolist()}
    L = len(c)
    assert c[0] == min(c) and c[1] < c[-1]
    for a in range(L):
        assert tuple(sorted((c[a], c[(a + 1) % L]))) in edges


def test_triangle_has_one_cycle():
    assert enumerate_chordless_cycles(frustrated_triangle()).cycles == ((0, 1, 2),)


def test_square_and_chord():
    sq = GraphModel(4, [(0, 1), (1, 2), (2, 3), (0, 3)], np.ones(4), np.zeros(4))
    assert enumerate_chordless_cycles(sq).cycles == ((0, 1, 2, 3),)
    ch = GraphModel(4, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)], np.ones(5), np.zeros(4))
    assert enumerate_chordless_cycles(ch).by_length() == {3: 2}


@pytest.mark.parametrize("max_len", [4, 8, 9])
def test_grid_cycles_match_brute_force(max_len):
    m = gen_spinglass(3, 1, 0)
    cl = enumerate_chordless_cycles(m, max_len)
    got = [frozenset(c) for c in cl]
    assert len(got) == len(set(got))
    assert set(got) == brute_chordless(m, max_len)
    assert cl.by_length().get(4) == 4
    for c in cl:
        _check_cycle_shape(m, c)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_graph_cycles_match_brute_force(seed):
    m = random_graph(np.random.default_rng(seed), 9, 0.45)
    cl = enumerate_chordless_cycles(m, 9)
    assert sorted(map(sorted, cl)) == sorted(map(sorted, brute_chordless(m, 9)))


def test_cycle_limits():
    with pytest.raises(OracleLimitError):
        enumerate_chordless_cycles(gen_spinglass(9, 1, 0))
    with pytest.raises(OracleLimitError):
        enumerate_chordless_cycles(frustrated_triangle(), 13)


# ---------------------------------------------------------------- metric polytope


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cut_matrices_pass(seed):
    rng = np.random.default_rng(seed)
    m = gen_spinglass(3, 1, 0)
    x = np.where(rng.random(9) < 0.5, 1.0, -1.0)
    triples = list(itertools.combinations(range(9), 3))
    rep = check_metric_polytope(np.outer(x, x), enumerate_chordless_cycles(m), tol=0.0, triples=triples)
    assert rep.ok and rep.checked > 0


def test_minus_half_matrix_violates():
    M = np.full((3, 3), -0.5) + 1.5 * np.eye(3)
    rep = check_metric_polytope(M, enumerate_chordless_cycles(frustrated_triangle()))
    tri = rep.of_kind("triangle")
    assert tri and tri[0].lhs == pytest.approx(0.5) and tri[0].rhs == pytest.approx(1.0)
    cyc = rep.of_kind("cyclic")
    assert [v.lhs for v in cyc] == [pytest.approx(-1.5)] and cyc[0].rhs == -1.0
    assert rep.max_violation == pytest.approx(0.5)
    assert rep.to_csv().splitlines()[0] == "kind,ids,lhs,rhs,slack"


def test_bound_violation():
    M = np.array([[1.0, 1.2], [1.2, 1.0]])
    assert check_metric_polytope(M, []).of_kind("bound")


def test_triangle_inequalities_direct():
    M = np.eye(3)
    M[0, 1] = M[1, 0] = 1.0
    M[1, 2] = M[2, 1] = 1.0
    M[0, 2] = M[2, 0] = -1.0
    rep = triangle_inequalities(M, [(0, 1, 2)])
    assert not rep.ok and rep.checked == 3


def test_converged_triangle_moments_in_polytope():
    m = frustrated_triangle()
    res = partial_sos(m, RegionCovering(((0, 1, 2),)), SolverConfig(tol=1e-6, max_sweeps=3000))
    rep = check_metric_polytope(moment_matrix(res.state), enumerate_chordless_cycles(m), tol=1e-3)
    assert rep.ok


# ---------------------------------------------------------------- ratios


def test_ratio_examples():
    assert ratio_to_best([4, 2], 4).values == (1.0, 0.5)
    assert ratio_to_best([3.0]).values == (1.0,)


def test_ratio_fallback():
    r = ratio_to_best([-1.0, -2.0])
    assert r.fallback and r.values == (-1.0, -2.0)
    assert ratio_to_best([1.0], 0.0).fallback
    with pytest.raises(ValueError):
        ratio_to_best([])
