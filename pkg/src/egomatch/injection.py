"""Benchmark construction: plant anomalies into a clean graph.

Two kinds of anomalies, injected in equal numbers:

* structural -- q disjoint groups of p nodes each are completed into
  cliques; only edges change.
* attribute  -- for each target node, a random candidate set is drawn and
  the target's feature row is replaced by the candidate row at the largest
  Euclidean distance; only features change.

All distances use the original, pre-injection features, so swaps never
cascade and the outcome is independent of target order. A fixed seed gives
an identical injected graph and label vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graphio import Graph, build_graph, undirected_pairs


@dataclass(frozen=True)
class InjectionConfig:
    p: int
    q: int
    candidate_size: int = 50
    seed: int = 0

    def validate(self, n: int) -> None:
        if self.p < 2:
            raise ConfigError(f"clique size p must be >= 2, got {self.p}")
        if self.q < 1:
            raise ConfigError(f"clique count q must be >= 1, got {self.q}")
        if self.candidate_size < 1:
            raise ConfigError(
                f"candidate_size must be >= 1, got {self.candidate_size}"
            )
        if 2 * self.p * self.q > n:
            raise ConfigError(
                f"injection needs 2*p*q <= n: 2*{self.p}*{self.q} = "
                f"{2 * self.p * self.q} exceeds n = {n}"
            )


def inject_structural(g: Graph, p: int, q: int,
                      rng: np.random.Generator) -> tuple[Graph, np.ndarray]:
    """Plant q disjoint cliques of size p; returns the new graph and labels.

    Exactly the p*q chosen nodes are labeled anomalous; existing edges and
    all features are untouched.
    """
    if p < 2 or q < 1:
        raise ConfigError(f"need p >= 2 and q >= 1, got p={p}, q={q}")
    if p * q > g.n:
        raise ConfigError(
            f"cannot pick {p * q} distinct nodes from a graph with {g.n}"
        )
    chosen = rng.choice(g.n, size=p * q, replace=False)
    groups = chosen.reshape(q, p)
    upper = np.triu_indices(p, k=1)
    clique_pairs = np.concatenate(
        [np.column_stack([group[upper[0]], group[upper[1]]]) for group in groups]
    )
    pairs = np.vstack([undirected_pairs(g), clique_pairs])
    labels = np.zeros(g.n, dtype=np.int8)
    labels[chosen] = 1
    return build_graph(pairs, g.features), labels


def inject_attribute(g: Graph, count: int, candidate_size: int,
                     rng: np.random.Generator,
                     exclude: np.ndarray | None = None
                     ) -> tuple[Graph, np.ndarray]:
    """Swap ``count`` feature rows to their most distant sampled candidate.

    Targets are drawn outside ``exclude``; candidates for a target are any
    ``candidate_size`` distinct other nodes. Edges are untouched.
    """
    if candidate_size < 1:
        raise ConfigError(f"candidate_size must be >= 1, got {candidate_size}")
    if candidate_size > g.n - 1:
        raise ConfigError(
            f"candidate_size {candidate_size} exceeds the {g.n - 1} "
            f"available candidates"
        )
    if exclude is None:
        eligible = np.arange(g.n)
    else:
        eligible = np.flatnonzero(np.asarray(exclude) == 0)
    if count > eligible.size:
        raise ConfigError(
            f"cannot pick {count} targets from {eligible.size} unlabeled nodes"
        )
    original = g.features
    swapped = original.copy()
    targets = eligible[rng.choice(eligible.size, size=count, replace=False)]
    for target in targets:
        candidates = rng.choice(g.n - 1, size=candidate_size, replace=False)
        candidates[candidates >= target] += 1
        distances = np.linalg.norm(original[candidates] - original[target], axis=1)
        swapped[target] = original[candidates[np.argmax(distances)]]
    labels = np.zeros(g.n, dtype=np.int8)
    labels[targets] = 1
    return build_graph(undirected_pairs(g), swapped), labels


def inject_anomalies(g: Graph, cfg: InjectionConfig
                     ) -> tuple[Graph, np.ndarray, dict]:
    """Structural then attribute injection with disjoint node sets.

    Returns the injected graph, the merged 0/1 label vector (2*p*q ones),
    and a provenance record with the seed, the parameters, and the chosen
    node ids.
    """
    cfg.validate(g.n)
    struct_ss, attr_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    with_cliques, struct_labels = inject_structural(
        g, cfg.p, cfg.q, np.random.default_rng(struct_ss)
    )
    injected, attr_labels = inject_attribute(
        with_cliques, cfg.p * cfg.q, cfg.candidate_size,
        np.random.default_rng(attr_ss), exclude=struct_labels,
    )
    labels = (struct_labels | attr_labels).astype(np.int8)
    provenance = {
        "seed": cfg.seed,
        "p": cfg.p,
        "q": cfg.q,
        "candidate_size": cfg.candidate_size,
        "structural_nodes": np.flatnonzero(struct_labels).tolist(),
        "attribute_nodes": np.flatnonzero(attr_labels).tolist(),
    }
    return injected, labels, provenance
