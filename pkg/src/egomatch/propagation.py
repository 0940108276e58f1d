"""One-shot neighbor-context preprocessing.

Every node gets two feature views computed once, before any training:

* ego features: the raw attribute rows, untouched;
* neighbor features: a k-step propagation over the symmetrically normalized
  adjacency (virtual self-loops included) whose k-step operator has its
  diagonal zeroed, so a node's own signal never leaks into its context.

The normalized adjacency is never materialized; everything is expressed as
operator applications over the CSR structure, costing O(k * edges * dim).
The diagonal of the k-step operator is computed exactly via split powers:
``diag(S^k)_i = (S^ceil(k/2) e_i) . (S^floor(k/2) e_i)``, which for the
default k=2 collapses to one pass over the edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigError, DimensionError
from .graphio import Graph, degrees, load_features, save_matrix


@dataclass(frozen=True, eq=False)
class PreprocessedFeatures:
    """Ego/neighbor feature pair produced by :func:`anonymized_propagate`."""

    ego: np.ndarray
    neighbor: np.ndarray
    k: int

    @property
    def n(self) -> int:
        return self.ego.shape[0]

    @property
    def num_features(self) -> int:
        return self.ego.shape[1]


def _inv_sqrt_degrees(g: Graph) -> np.ndarray:
    # +1 for the virtual self-loop, so degrees are never zero
    return 1.0 / np.sqrt(degrees(g) + 1.0)


def normalized_adjacency_apply(g: Graph, v: np.ndarray) -> np.ndarray:
    """Apply the normalized adjacency with virtual self-loops to ``v``.

    Pure function; ``v`` must have one row per node.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != g.n:
        raise DimensionError(
            f"operand must be ({g.n}, d), got {v.shape}"
        )
    w = _inv_sqrt_degrees(g)
    scaled = v * w[:, None]
    out = backend.adj_rowsum(g.indptr, g.indices, scaled)
    out += scaled
    out *= w[:, None]
    return out


def propagation_diagonal(g: Graph, k: int) -> np.ndarray:
    """Exact diagonal of the k-step normalized propagation operator."""
    w = _inv_sqrt_degrees(g)
    wsq = w * w
    if k == 1:
        return wsq
    if k == 2:
        neighbor_wsq = backend.adj_rowsum(g.indptr, g.indices, wsq[:, None])[:, 0]
        return wsq * (wsq + neighbor_wsq)

    # split powers, basis vectors processed in blocks
    a, b = (k + 1) // 2, k // 2
    diag = np.empty(g.n, dtype=np.float64)
    block = 256
    for c0 in range(0, g.n, block):
        c1 = min(c0 + block, g.n)
        basis = np.zeros((g.n, c1 - c0), dtype=np.float64)
        basis[np.arange(c0, c1), np.arange(c1 - c0)] = 1.0
        half = basis
        for _ in range(b):
            half = normalized_adjacency_apply(g, half)
        rest = half
        for _ in range(a - b):
            rest = normalized_adjacency_apply(g, rest)
        diag[c0:c1] = np.einsum("rc,rc->c", half, rest)
    return diag


def anonymized_propagate(g: Graph, k: int) -> PreprocessedFeatures:
    """Compute ego and neighbor features in one shot.

    ``neighbor`` is the k-step propagation of the features with the k-step
    operator's diagonal removed: row i is corrected by ``diag_i * x_i``.
    Call this once per run; training never needs the adjacency again.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise ConfigError(f"propagation steps k must be an integer >= 1, got {k!r}")
    propagated = g.features
    for _ in range(k):
        propagated = normalized_adjacency_apply(g, propagated)
    diag = propagation_diagonal(g, k)
    neighbor = propagated - diag[:, None] * g.features
    return PreprocessedFeatures(ego=g.features.copy(), neighbor=neighbor, k=int(k))


def save_preprocessed(prep: PreprocessedFeatures, ego_path, neighbor_path) -> None:
    """Dump both matrices in the feature-file format."""
    save_matrix(ego_path, prep.ego)
    save_matrix(neighbor_path, prep.neighbor)


def load_preprocessed(ego_path, neighbor_path, k: int) -> PreprocessedFeatures:
    """Reload dumped matrices so training can run without the graph."""
    ego = load_features(ego_path)
    neighbor = load_features(neighbor_path)
    if ego.shape != neighbor.shape:
        raise DimensionError(
            f"ego matrix is {ego.shape} but neighbor matrix is {neighbor.shape}"
        )
    return PreprocessedFeatures(ego=ego, neighbor=neighbor, k=int(k))
