import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psos.model import (
    BinaryImage,
    DimensionError,
    GraphModel,
    ModelError,
    RegionCovering,
    SpinGlassDistribution,
    StructureError,
    add_noise,
    apex_reduction,
    augment_with_diagonals,
    gen_denoise_model,
    gen_spinglass,
    grid_model,
    infer_grid_side,
    objective_value,
    plain_grid,
    plaquette_covering,
    triangle_covering,
    validate_covering,
    vertex_covering,
    with_all_diagonals,
)
from psos.oracle import exhaustive_map

from conftest import brute_map


# ---------------------------------------------------------------- GraphModel


def test_model_canonicalizes_edge_orientation():
    m = GraphModel(3, [(2, 0), (1, 2)], [1.0, 2.0], [0, 0, 0])
    assert m.edges.tolist() == [[0, 2], [1, 2]]


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 5)]])
def test_model_rejects_bad_edges(edges):
    with pytest.raises(ModelError):
        GraphModel(3, edges, np.ones(len(edges)), np.zeros(3))


def test_model_rejects_nonfinite_and_bad_lengths():
    with pytest.raises(ModelError):
        GraphModel(2, [(0, 1)], [np.inf], [0, 0])
    with pytest.raises(DimensionError):
        GraphModel(2, [(0, 1)], [1.0, 2.0], [0, 0])
    with pytest.raises(DimensionError):
        GraphModel(2, [], [], [0])


def test_model_arrays_are_read_only():
    m = gen_spinglass(3, 1, 0)
    with pytest.raises(ValueError):
        m.edge_weights[0] = 5.0


# ---------------------------------------------------------------- objective


def test_objective_zero_weights():
    m = GraphModel(4, [(0, 1), (2, 3)], [0.0, 0.0], np.zeros(4))
    assert objective_value(m, [1, -1, -1, 1]) == 0.0


def test_objective_two_vertex_sign():
    m = GraphModel(2, [(0, 1)], [1.0], [0.0, 0.0])
    assert objective_value(m, [1, -1]) == -1.0


def test_objective_denoise_2x2():
    y = BinaryImage(2, 2, [1, 1, 1, 1])
    m = gen_denoise_model(y, 1.26)
    assert objective_value(m, [1, 1, 1, 1]) == pytest.approx(9.04, abs=1e-12)


def test_objective_length_mismatch():
    m = GraphModel(2, [(0, 1)], [1.0], [0.0, 0.0])
    with pytest.raises(DimensionError):
        objective_value(m, [1, 1, 1])
    with pytest.raises(ModelError):
        objective_value(m, [1, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_spin_flip_symmetry_without_field(seed):
    rng = np.random.default_rng(seed)
    m = gen_spinglass(3, 4, seed)
    m0 = GraphModel(m.num_vertices, m.edges, m.edge_weights, np.zeros(m.num_vertices))
    x = np.where(rng.random(9) < 0.5, 1, -1)
    assert objective_value(m0, x) == objective_value(m0, -x)


# ---------------------------------------------------------------- grids


@pytest.mark.parametrize("side,nv,ne", [(2, 4, 4), (20, 400, 760), (1, 1, 0)])
def test_grid_counts(side, nv, ne):
    m = grid_model(side, np.ones(2 * side * (side - 1)), np.zeros(side * side))
    assert (m.num_vertices, m.num_edges) == (nv, ne)


def test_grid_edges_are_unit_distance():
    m = grid_model(4, np.ones(24), np.zeros(16))
    for i, j in m.edges.tolist():
        (a, b), (c, d) = divmod(i, 4), divmod(j, 4)
        assert abs(a - c) + abs(b - d) == 1


def test_grid_size_mismatch():
    with pytest.raises(DimensionError):
        grid_model(3, np.ones(5), np.zeros(9))


@pytest.mark.parametrize("side,added,total", [(2, 1, 5), (20, 361, 1121)])
def test_diagonal_counts(side, added, total):
    m = gen_spinglass(side, 1, 0)
    a = augment_with_diagonals(m, side)
    assert a.num_edges - m.num_edges == added
    assert a.num_edges == total


def test_diagonals_run_top_left_to_bottom_right_with_zero_weight():
    m = gen_spinglass(3, 1, 0)
    a = augment_with_diagonals(m, 3)
    extra = a.edges[m.num_edges:].tolist()
    assert extra == [[0, 4], [1, 5], [3, 7], [4, 8]]
    assert np.all(a.edge_weights[m.num_edges:] == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_diagonals_keep_objective(seed):
    m = gen_spinglass(3, 2, seed)
    a = augment_with_diagonals(m, 3)
    x = np.where(np.random.default_rng(seed).random(9) < 0.5, 1, -1)
    assert objective_value(a, x) == objective_value(m, x)


def test_diagonals_need_a_grid():
    m = GraphModel(4, [(0, 3)], [1.0], np.zeros(4))
    with pytest.raises(StructureError):
        augment_with_diagonals(m, 2)


def test_grid_helpers_round_trip():
    m = gen_spinglass(4, 3, 1)
    a = augment_with_diagonals(m, 4)
    assert infer_grid_side(a) == 4
    assert plain_grid(a, 4) == m
    assert with_all_diagonals(m, 4) == a
    with pytest.raises(StructureError):
        infer_grid_side(GraphModel(4, [(1, 2)], [1.0], np.zeros(4)))


# ---------------------------------------------------------------- coverings


@pytest.mark.parametrize("side,count", [(2, 2), (10, 162), (20, 722)])
def test_triangle_covering_size(side, count):
    assert len(triangle_covering(side)) == count == 2 * (side - 1) ** 2


def test_triangle_covering_matches_diagonals():
    for side in (2, 3, 5):
        a = augment_with_diagonals(gen_spinglass(side, 1, 0), side)
        assert validate_covering(a, triangle_covering(side)).ok


def test_triangle_covering_misses_other_diagonal():
    m = gen_spinglass(2, 1, 0)
    bad = GraphModel(4, np.vstack([m.edges, [[1, 2]]]), np.append(m.edge_weights, 0.0), m.vertex_weights)
    rep = validate_covering(bad, triangle_covering(2))
    assert not rep.ok and rep.uncovered_edges == ((1, 2),) and rep.uncovered_vertices == ()


def test_empty_covering_reports_all_vertices():
    m = gen_spinglass(2, 1, 0)
    rep = validate_covering(m, RegionCovering(()))
    assert rep.uncovered_vertices == (0, 1, 2, 3)
    assert len(rep.uncovered_edges) == 4


@pytest.mark.parametrize("side,count", [(2, 1), (20, 361)])
def test_plaquette_covering(side, count):
    cov = plaquette_covering(side)
    assert len(cov) == count
    assert all(len(r) == 4 for r in cov.regions)
    assert validate_covering(gen_spinglass(side, 1, 0), cov).ok


@pytest.mark.parametrize("make", [triangle_covering, plaquette_covering])
def test_coverings_need_side_two(make):
    with pytest.raises(ModelError):
        make(1)


def test_vertex_covering():
    m = gen_spinglass(3, 1, 0)
    rep = validate_covering(m, vertex_covering(9))
    assert rep.uncovered_vertices == () and len(rep.uncovered_edges) == m.num_edges


# ---------------------------------------------------------------- apex


def test_apex_example():
    m = GraphModel(2, [], [], [1.0, -2.0])
    a = apex_reduction(m)
    assert a.num_vertices == 3
    assert a.edge_dict() == {(0, 2): 1.0, (1, 2): -2.0}
    assert np.all(a.vertex_weights == 0.0)


def test_apex_without_field():
    m = GraphModel(3, [(0, 1)], [2.0], np.zeros(3))
    a = apex_reduction(m)
    assert a.num_vertices == 4 and a.edge_dict() == m.edge_dict()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 11))
def test_apex_preserves_optimum(seed, n):
    rng = np.random.default_rng(seed)
    m = GraphModel(n, [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)] * (n > 2),
                   rng.normal(size=n - 1 + (n > 2)), rng.normal(size=n))
    _, v0 = exhaustive_map(m)
    x1, v1 = exhaustive_map(apex_reduction(m))
    assert v1 == pytest.approx(v0, abs=1e-9)
    # the optimum with the apex at +1 restricts to an optimum of the original
    y = x1[:n] * x1[n]
    assert objective_value(m, y) == pytest.approx(v0, abs=1e-9)


def test_apex_on_small_spinglass():
    m = gen_spinglass(2, 4, 3)
    assert exhaustive_map(apex_reduction(m))[1] == pytest.approx(exhaustive_map(m)[1], abs=1e-12)


# ---------------------------------------------------------------- generators


def test_spinglass_uniform_values():
    m = gen_spinglass(5, SpinGlassDistribution.UNIFORM_PM1, 11)
    assert set(m.edge_weights.tolist()) <= {1.0, -1.0}
    assert set(m.vertex_weights.tolist()) <= {1.0, -1.0}
    m2 = gen_spinglass(5, 2, 11)
    assert set(m2.vertex_weights.tolist()) <= {0.5, -0.5}


def test_spinglass_weak_field_scale():
    h = np.concatenate([gen_spinglass(20, 3, s).vertex_weights for s in range(5)])
    assert 0.08 < h.std() < 0.12
    w = gen_spinglass(20, 3, 0).edge_weights
    assert 0.8 < w.std() < 1.2


def test_spinglass_deterministic():
    assert gen_spinglass(6, 4, 99) == gen_spinglass(6, 4, 99)
    assert gen_spinglass(6, 4, 99) != gen_spinglass(6, 4, 100)


def test_spinglass_sampling_order():
    # edges first, then vertices, from one stream
    rng = np.random.default_rng(5)
    w = rng.standard_normal(12)
    h = rng.standard_normal(9)
    m = gen_spinglass(3, 4, 5)
    assert np.array_equal(m.edge_weights, w) and np.array_equal(m.vertex_weights, h)


def test_denoise_model_weights():
    y = BinaryImage(3, 2, [1, -1, 1, 1, 1, -1])
    m = gen_denoise_model(y, 1.26)
    assert np.all(m.edge_weights == 1.0) and m.num_edges == 7
    assert np.allclose(m.vertex_weights, 1.26 * y.pixels)


def test_denoise_recovers_clean_image_with_strong_field():
    x0 = BinaryImage.from_array([[1, -1, 1], [-1, -1, 1], [1, 1, -1]])
    x, _ = exhaustive_map(gen_denoise_model(x0, 10.0))
    assert np.array_equal(x, x0.pixels)


def test_image_validation():
    with pytest.raises(DimensionError):
        BinaryImage(2, 2, [1, 1, 1])
    with pytest.raises(ModelError):
        BinaryImage(2, 1, [1, 0])


def test_noise_p_zero_is_identity():
    img = BinaryImage.from_array(np.where(np.random.default_rng(0).random((7, 5)) < 0.5, 1, -1))
    for kind in ("bernoulli", "blockwise"):
        assert add_noise(img, kind, 0.0, 3) == img


def test_bernoulli_flip_fraction():
    img = BinaryImage(100, 100, np.ones(10000))
    for seed in range(5):
        frac = np.mean(add_noise(img, "bernoulli", 0.2, seed).pixels == -1)
        assert 0.17 <= frac <= 0.23


def test_blockwise_flips_union_of_blocks_once():
    img = BinaryImage(50, 40, np.ones(2000))
    noisy = add_noise(img, "blockwise", 0.006, 4)
    rng = np.random.default_rng(4)
    centers = rng.random((40, 50)) < 0.006
    expect = np.zeros_like(centers)
    for r, c in zip(*np.nonzero(centers)):
        expect[max(r - 1, 0):r + 2, max(c - 1, 0):c + 2] = True
    assert np.array_equal(noisy.to_array() == -1, expect)


def test_noise_rejects_bad_p():
    img = BinaryImage(2, 2, np.ones(4))
    with pytest.raises(ModelError):
        add_noise(img, "bernoulli", 1.5, 0)
    with pytest.raises(ModelError):
        add_noise(img, "salt", 0.1, 0)


def test_exhaustive_agrees_with_brute_on_generated_models():
    m = gen_spinglass(3, 3, 8)
    assert exhaustive_map(m)[1] == pytest.approx(brute_map(m)[1], abs=1e-12)
