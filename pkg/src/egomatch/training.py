"""Contrastive training of the ego-neighbor matching network.

The loop never sees the graph: :func:`train` runs the one-shot preprocessing
and then hands only the ego/neighbor matrices to :func:`train_preprocessed`.
Each epoch shuffles the nodes, partitions them into batches (last partial
batch kept), draws fresh negatives per batch, and applies one Adam update
per batch. Negatives are batch-local random nonzero cyclic shifts, which
cost O(batch) and can never pair a node with itself.

Randomness is split into four independent streams derived from the seed
(init, shuffling, neighbor negatives, ego negatives), so a fixed seed gives
bit-identical parameters run to run.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import model as model_mod
from . import propagation
from .errors import ConfigError
from .graphio import Graph
from .model import ModelParameters, _cosine_rows_with_grad, _loss_rows_and_dc
from .propagation import PreprocessedFeatures

FULL_BATCH = "full"


@dataclass
class TrainingConfig:
    """Hyper-parameters of one training run.

    Defaults follow the citation-network setting: two propagation steps,
    128-dimensional embeddings, lr 3e-4 for 100 epochs, trade-offs
    alpha=0.9 / gamma=0.1, full-batch updates.
    """

    k: int = 2
    d_h: int = 128
    lr: float = 3e-4
    epochs: int = 100
    alpha: float = 0.9
    gamma: float = 0.1
    batch_size: int | str = FULL_BATCH
    seed: int = 0
    eps_clamp: float = 1e-7

    def validate(self, n: int | None = None) -> None:
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}")
        if not isinstance(self.d_h, (int, np.integer)) or self.d_h < 1:
            raise ConfigError(f"d_h must be an integer >= 1, got {self.d_h!r}")
        if not self.lr >= 0.0:
            raise ConfigError(f"learning rate must be >= 0, got {self.lr!r}")
        if not isinstance(self.epochs, (int, np.integer)) or self.epochs < 1:
            raise ConfigError(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if not self.alpha >= 0.0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha!r}")
        if not self.gamma >= 0.0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma!r}")
        if not 0.0 < self.eps_clamp < 0.5:
            raise ConfigError(
                f"eps_clamp must be in (0, 0.5), got {self.eps_clamp!r}"
            )
        if self.batch_size != FULL_BATCH:
            if not isinstance(self.batch_size, (int, np.integer)) or self.batch_size < 2:
                raise ConfigError(
                    f"batch_size must be 'full' or an integer >= 2, "
                    f"got {self.batch_size!r}"
                )
            if n is not None and self.batch_size > n:
                raise ConfigError(
                    f"batch_size {self.batch_size} exceeds node count {n}"
                )


@dataclass(frozen=True, eq=False)
class NegativeAssignment:
    """Per-anchor negative partners, one neighbor-side and one ego-side.

    Both assignments are nonzero cyclic shifts of the batch drawn from
    independent streams, so no anchor is ever paired with itself.
    """

    nbr_partner: np.ndarray
    ego_partner: np.ndarray
    nbr_shift: int
    ego_shift: int


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    seconds: float


def sample_negatives(batch_indices, nbr_rng: np.random.Generator,
                     ego_rng: np.random.Generator) -> NegativeAssignment:
    """Draw negative partners for every anchor in the batch."""
    batch = np.asarray(batch_indices)
    size = batch.size
    if size < 2:
        raise ConfigError("a batch needs at least 2 nodes to draw negatives")
    nbr_shift = int(nbr_rng.integers(1, size))
    ego_shift = int(ego_rng.integers(1, size))
    return NegativeAssignment(
        nbr_partner=np.roll(batch, -nbr_shift),
        ego_partner=np.roll(batch, -ego_shift),
        nbr_shift=nbr_shift,
        ego_shift=ego_shift,
    )


def loss_from_similarities(c_pos, c_nbr, c_ego, alpha: float, gamma: float,
                           eps_clamp: float = 1e-7) -> np.ndarray:
    """Per-anchor loss from raw similarities in [-1, 1].

    Each similarity is remapped to [0, 1] and clamped to
    [eps_clamp, 1 - eps_clamp] before the logs, so the result is always
    finite.
    """
    def clamped(c):
        return np.clip(model_mod.remap(np.asarray(c, dtype=np.float64)),
                       eps_clamp, 1.0 - eps_clamp)

    return -(
        np.log(clamped(c_pos))
        + alpha * np.log(1.0 - clamped(c_nbr))
        + gamma * np.log(1.0 - clamped(c_ego))
    )


def contrastive_loss(params: ModelParameters, prep: PreprocessedFeatures,
                     batch, neg: NegativeAssignment, alpha: float,
                     gamma: float, eps_clamp: float = 1e-7) -> float:
    """Summed three-term loss over a batch, via the definitional path."""
    batch = np.asarray(batch)
    c_pos = model_mod.row_similarities(params, prep.ego[batch], prep.neighbor[batch])
    c_nbr = model_mod.row_similarities(
        params, prep.ego[batch], prep.neighbor[neg.nbr_partner]
    )
    # both sides of the ego negative are ego features: layer 1 twice
    c_ego = model_mod.ego_similarities(
        params, prep.ego[batch], prep.ego[neg.ego_partner]
    )
    return float(
        loss_from_similarities(c_pos, c_nbr, c_ego, alpha, gamma, eps_clamp).sum()
    )


def _batch_loss_grads(params, x_ego, x_nbr, nbr_shift, ego_shift,
                      alpha, gamma, eps_clamp):
    """Fused loss and gradients for one batch with cyclic-shift negatives.

    Embeddings are computed once; negative pairings are row rolls, and their
    gradient contributions are rolled back, so the whole step is a handful
    of dense matrix products.
    """
    size = x_ego.shape[0]
    u = x_ego @ params.w1 + params.b1
    v = x_nbr @ params.w2 + params.b2
    ones = np.ones(size)

    c_pos, du_pos, dv_pos = _cosine_rows_with_grad(u, v)
    loss_pos, dc_pos = _loss_rows_and_dc(c_pos, True, ones, eps_clamp)

    v_neg = np.roll(v, -nbr_shift, axis=0)
    c_nbr, du_nbr, dv_nbr = _cosine_rows_with_grad(u, v_neg)
    loss_nbr, dc_nbr = _loss_rows_and_dc(c_nbr, False, alpha * ones, eps_clamp)

    u_neg = np.roll(u, -ego_shift, axis=0)
    c_ego, du_ego, dv_ego = _cosine_rows_with_grad(u, u_neg)
    loss_ego, dc_ego = _loss_rows_and_dc(c_ego, False, gamma * ones, eps_clamp)

    g_u = dc_pos[:, None] * du_pos
    g_u += dc_nbr[:, None] * du_nbr
    g_u += dc_ego[:, None] * du_ego
    g_u += np.roll(dc_ego[:, None] * dv_ego, ego_shift, axis=0)
    g_v = dc_pos[:, None] * dv_pos
    g_v += np.roll(dc_nbr[:, None] * dv_nbr, nbr_shift, axis=0)

    grads = model_mod.Gradients(
        w1=x_ego.T @ g_u,
        b1=g_u.sum(axis=0),
        w2=x_nbr.T @ g_v,
        b2=g_v.sum(axis=0),
    )
    loss = float(loss_pos.sum() + loss_nbr.sum() + loss_ego.sum())
    return loss, grads


class Adam:
    """Adam optimizer over the four parameter tensors, updates in place."""

    def __init__(self, params: ModelParameters, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {name: np.zeros_like(getattr(params, name))
                   for name in ("w1", "b1", "w2", "b2")}
        self._v = {name: np.zeros_like(getattr(params, name))
                   for name in ("w1", "b1", "w2", "b2")}

    def step(self, params: ModelParameters, grads) -> None:
        self.t += 1
        for name in ("w1", "b1", "w2", "b2"):
            g = getattr(grads, name)
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            getattr(params, name)[...] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _partition(perm: np.ndarray, batch_size: int) -> list[np.ndarray]:
    batches = [perm[i:i + batch_size] for i in range(0, perm.size, batch_size)]
    if len(batches) > 1 and batches[-1].size == 1:
        # a singleton batch has no valid negative; fold it into the previous one
        batches[-2] = np.concatenate([batches[-2], batches[-1]])
        batches.pop()
    return batches


def train(g: Graph, cfg: TrainingConfig,
          on_epoch: Callable[[EpochStats], None] | None = None) -> ModelParameters:
    """Preprocess once, then fit the matching network.

    The propagation runs exactly once per call; the optimization loop only
    ever touches the resulting ego/neighbor matrices.
    """
    cfg.validate(n=g.n)
    if g.n < 2:
        raise ConfigError(f"training needs at least 2 nodes, got {g.n}")
    prep = propagation.anonymized_propagate(g, cfg.k)
    return train_preprocessed(prep, cfg, on_epoch)


def train_preprocessed(prep: PreprocessedFeatures, cfg: TrainingConfig,
                       on_epoch: Callable[[EpochStats], None] | None = None
                       ) -> ModelParameters:
    """Fit the network from precomputed ego/neighbor features.

    This is the whole training loop; it has no access path to any adjacency
    structure.
    """
    n = prep.n
    cfg.validate(n=n)
    if n < 2:
        raise ConfigError(f"training needs at least 2 nodes, got {n}")
    init_ss, shuffle_ss, nbr_ss, ego_ss = np.random.SeedSequence(cfg.seed).spawn(4)
    init_rng = np.random.default_rng(init_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    nbr_rng = np.random.default_rng(nbr_ss)
    ego_rng = np.random.default_rng(ego_ss)

    params = model_mod.init_parameters(prep.num_features, cfg.d_h, init_rng)
    optimizer = Adam(params, lr=cfg.lr)
    batch_size = n if cfg.batch_size == FULL_BATCH else int(cfg.batch_size)

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        total = 0.0
        for batch in _partition(shuffle_rng.permutation(n), batch_size):
            neg = sample_negatives(batch, nbr_rng, ego_rng)
            loss, grads = _batch_loss_grads(
                params, prep.ego[batch], prep.neighbor[batch],
                neg.nbr_shift, neg.ego_shift,
                cfg.alpha, cfg.gamma, cfg.eps_clamp,
            )
            optimizer.step(params, grads)
            total += loss
        if on_epoch is not None:
            on_epoch(EpochStats(
                epoch=epoch,
                mean_loss=total / n,
                seconds=time.perf_counter() - started,
            ))
    return params
