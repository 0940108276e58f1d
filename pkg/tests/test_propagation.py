import numpy as np
import pytest

import egomatch.propagation as propagation
from egomatch import backend, build_graph
from egomatch.errors import ConfigError, DimensionError
from egomatch.propagation import (
    anonymized_propagate,
    load_preprocessed,
    normalized_adjacency_apply,
    propagation_diagonal,
    save_preprocessed,
)

from oracles import (
    dense_adjacency,
    dense_masked_propagation,
    dense_normalized_adjacency,
)


def random_graph(rng, n, avg_edges=3, d=4):
    pairs = rng.integers(0, n, size=(avg_edges * n, 2))
    return build_graph(pairs, rng.normal(size=(n, d)))


def test_apply_two_node_single_edge():
    g = build_graph([[0, 1]], np.eye(2))
    out = normalized_adjacency_apply(g, np.eye(2))
    assert np.allclose(out, [[0.5, 0.5], [0.5, 0.5]])


def test_apply_edgeless_is_identity(rng):
    g = build_graph(np.empty((0, 2)), rng.normal(size=(5, 3)))
    v = rng.normal(size=(5, 2))
    assert np.array_equal(normalized_adjacency_apply(g, v), v)


def test_apply_matches_dense_oracle(kernel_backend, rng):
    g = random_graph(rng, 30)
    v = rng.normal(size=(30, 4))
    s = dense_normalized_adjacency(dense_adjacency(g))
    assert np.abs(normalized_adjacency_apply(g, v) - s @ v).max() < 1e-12


def test_apply_rejects_bad_shapes(rng):
    g = random_graph(rng, 10)
    with pytest.raises(DimensionError):
        normalized_adjacency_apply(g, rng.normal(size=(11, 2)))
    with pytest.raises(DimensionError):
        normalized_adjacency_apply(g, rng.normal(size=10))


def test_propagate_two_node_hand_checked():
    # dense oracle (M * S) X for the single-edge pair graph, hand-checkable
    g = build_graph([[0, 1]], np.eye(2))
    prep = anonymized_propagate(g, 1)
    assert np.allclose(prep.neighbor, [[0.0, 0.5], [0.5, 0.0]])
    assert np.array_equal(prep.ego, np.eye(2))


def test_propagate_edgeless_gives_zero(rng):
    g = build_graph(np.empty((0, 2)), rng.normal(size=(6, 3)))
    for k in (1, 2, 5):
        assert np.all(anonymized_propagate(g, k).neighbor == 0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_propagate_matches_dense_oracle(kernel_backend, rng, k):
    g = random_graph(rng, 50, d=6)
    expected = dense_masked_propagation(dense_adjacency(g), g.features, k)
    got = anonymized_propagate(g, k).neighbor
    assert np.abs(got - expected).max() < 1e-10


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_diagonal_exact_vs_dense_power(rng, k):
    g = random_graph(rng, 37)
    s = dense_normalized_adjacency(dense_adjacency(g))
    expected = np.diag(np.linalg.matrix_power(s, k))
    assert np.abs(propagation_diagonal(g, k) - expected).max() < 1e-12


def test_invalid_k_rejected(rng):
    g = random_graph(rng, 5)
    for bad in (0, -1, 1.5, "2", None, True):
        with pytest.raises(ConfigError):
            anonymized_propagate(g, bad)


def test_ego_is_raw_features_bit_for_bit(rng):
    g = random_graph(rng, 20)
    prep = anonymized_propagate(g, 2)
    assert np.array_equal(prep.ego, g.features)
    assert prep.ego.tobytes() == g.features.tobytes()


def test_zero_self_contribution(rng):
    # replacing one node's features never changes that node's neighbor row
    g = random_graph(rng, 25, d=3)
    base = anonymized_propagate(g, 2).neighbor
    for node in (0, 7, 24):
        for _ in range(3):
            perturbed = g.features.copy()
            perturbed[node] = rng.normal(size=3) * 10.0
            g2 = build_graph(
                np.column_stack([
                    np.repeat(np.arange(g.n), np.diff(g.indptr)), g.indices
                ]),
                perturbed,
            )
            other = anonymized_propagate(g2, 2).neighbor
            assert np.abs(other[node] - base[node]).max() < 1e-10


def test_linearity(rng):
    g = random_graph(rng, 30, d=4)
    x1 = rng.normal(size=(30, 4))
    x2 = rng.normal(size=(30, 4))
    a, b = 2.5, -1.25

    def propagate_features(x):
        g_x = build_graph(
            np.column_stack([
                np.repeat(np.arange(g.n), np.diff(g.indptr)), g.indices
            ]),
            x,
        )
        return anonymized_propagate(g_x, 2).neighbor

    combined = propagate_features(a * x1 + b * x2)
    split = a * propagate_features(x1) + b * propagate_features(x2)
    assert np.abs(combined - split).max() < 1e-10


def test_edge_touch_cost_contract(rng, monkeypatch):
    # the kernel sweeps the edges k times for the features, plus one
    # single-column pass for the k=2 diagonal
    g = random_graph(rng, 40)
    calls = []
    real = backend.adj_rowsum

    def counting(indptr, indices, v, out=None):
        calls.append(v.shape[1])
        return real(indptr, indices, v, out)

    monkeypatch.setattr(propagation.backend, "adj_rowsum", counting)
    anonymized_propagate(g, 2)
    wide = [c for c in calls if c == g.num_features]
    assert len(wide) == 2
    assert len(calls) == 3


def test_backends_agree(rng):
    g = random_graph(rng, 60, d=5)
    results = {}
    for name in backend.available_backends():
        with backend.use_backend(name):
            results[name] = anonymized_propagate(g, 3).neighbor
    values = list(results.values())
    for other in values[1:]:
        assert np.abs(values[0] - other).max() < 1e-12


def test_preprocessed_dump_round_trip(tmp_path, rng):
    g = random_graph(rng, 15, d=3)
    prep = anonymized_propagate(g, 2)
    save_preprocessed(prep, tmp_path / "ego.txt", tmp_path / "nbr.txt")
    again = load_preprocessed(tmp_path / "ego.txt", tmp_path / "nbr.txt", k=2)
    assert np.array_equal(again.ego, prep.ego)
    assert np.array_equal(again.neighbor, prep.neighbor)
    assert again.k == 2
