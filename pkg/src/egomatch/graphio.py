"""Graph data model and plain-text file I/O.

A graph is an undirected attributed graph: a symmetric binary adjacency in
CSR form (no self-loops, no duplicate entries) plus a dense float64 feature
matrix with one row per node. Instances are immutable after construction and
safe to share across workers.

File formats, all plain text:

* edge list -- one ``i j`` pair of zero-based node ids per line, ``#``
  comment lines ignored; directed/duplicated input is symmetrized.
* features  -- one whitespace-separated row of floats per node.
* labels    -- one ``0`` or ``1`` per line, same node order as the features.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import InputFormatError


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected attributed graph (CSR adjacency + dense features)."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    features: np.ndarray

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (half the stored directed entries)."""
        return self.indices.size // 2

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


def build_graph(pairs, features) -> Graph:
    """Build a canonical :class:`Graph` from raw edge pairs and features.

    Duplicate edges and self-loops are dropped, missing reverse edges are
    added, and CSR rows come out sorted. ``pairs`` may be empty.
    """
    x = np.array(features, dtype=np.float64, order="C", ndmin=2)
    if x.ndim != 2:
        raise InputFormatError("feature matrix must be two-dimensional")
    n = x.shape[0]

    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        if pairs.min() < 0:
            raise InputFormatError("negative node id in edge list")
        if pairs.max() >= n:
            raise InputFormatError(
                f"edge references node {pairs.max()} but there are only "
                f"{n} feature rows"
            )
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if pairs.size:
        directed = np.unique(np.vstack([pairs, pairs[:, ::-1]]), axis=0)
        indices = np.ascontiguousarray(directed[:, 1])
        counts = np.bincount(directed[:, 0], minlength=n)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    else:
        indices = np.empty(0, dtype=np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)

    for arr in (indptr, indices, x):
        arr.setflags(write=False)
    return Graph(n=n, indptr=indptr, indices=indices, features=x)


def degrees(g: Graph) -> np.ndarray:
    """Per-node neighbor counts (without the virtual self-loop)."""
    return np.diff(g.indptr)


def undirected_pairs(g: Graph) -> np.ndarray:
    """All undirected edges as an (m, 2) array with i < j, sorted."""
    rows = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    keep = rows < g.indices
    return np.column_stack([rows[keep], g.indices[keep]])


def l1_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit L1 norm; all-zero rows are left untouched."""
    norms = np.abs(x).sum(axis=1)
    norms[norms == 0.0] = 1.0
    return x / norms[:, None]


def load_edge_list(path) -> np.ndarray:
    """Read raw ``i j`` pairs; no symmetrization or deduplication here."""
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InputFormatError(
                    f"{path}:{lineno}: expected two node ids, got {line!r}"
                )
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise InputFormatError(
                    f"{path}:{lineno}: non-integer node id in {line!r}"
                ) from None
            if i < 0 or j < 0:
                raise InputFormatError(f"{path}:{lineno}: negative node id")
            pairs.append((i, j))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def load_features(path) -> np.ndarray:
    """Read a dense float64 matrix, one whitespace-separated row per node."""
    try:
        x = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    if x.size == 0:
        raise InputFormatError(f"{path}: no feature rows")
    return x


def save_matrix(path, x: np.ndarray) -> None:
    """Write a float64 matrix in the feature-file format (exact round-trip)."""
    np.savetxt(path, np.asarray(x, dtype=np.float64), fmt="%.17g")


def load_labels(path, n: int | None = None) -> np.ndarray:
    """Read one 0/1 label per line; length is checked when ``n`` is given."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line not in ("0", "1"):
                raise InputFormatError(
                    f"{path}:{lineno}: label must be 0 or 1, got {line!r}"
                )
            values.append(int(line))
    labels = np.array(values, dtype=np.int8)
    if n is not None and labels.size != n:
        raise InputFormatError(
            f"{path}: expected {n} labels, found {labels.size}"
        )
    return labels


def save_labels(path, labels: np.ndarray) -> None:
    with open(path, "w") as fh:
        for value in np.asarray(labels).ravel():
            fh.write(f"{int(value)}\n")


def load_graph(edge_list_path, features_path, l1_normalize: bool = False) -> Graph:
    """Load an undirected attributed graph from an edge list and a feature file.

    Input edges may be directed, duplicated, or contain self-loops; the
    result always satisfies the Graph invariants. Row-wise L1 feature
    normalization is off by default.
    """
    features = load_features(features_path)
    if l1_normalize:
        features = l1_normalize_rows(features)
    pairs = load_edge_list(edge_list_path)
    return build_graph(pairs, features)


def save_graph(g: Graph, edge_list_path, features_path) -> None:
    """Write a graph back to the edge-list / feature formats."""
    buf = io.StringIO()
    for i, j in undirected_pairs(g):
        buf.write(f"{i} {j}\n")
    with open(edge_list_path, "w") as fh:
        fh.write(buf.getvalue())
    save_matrix(features_path, g.features)
