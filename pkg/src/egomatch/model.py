"""Linear ego-neighbor matching network with hand-derived gradients.

Two affine layers (no activations) map ego and neighbor features into a
shared low-dimensional space; agreement is a cosine similarity remapped from
[-1, 1] to [0, 1]. Gradients of the contrastive pair losses are analytic.

The similarity path (:func:`embed`, :func:`cosine`,
:func:`pairwise_similarity`, :func:`row_similarities`) deliberately avoids
BLAS matmul: ``np.einsum(..., optimize=False)`` gives per-row results that do
not depend on how many rows are in the batch, so scoring a whole matrix and
scoring one pair agree bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import DimensionError, InputFormatError

# embeddings with a norm below this are treated as degenerate: similarity 0,
# zero gradient for the pair
NORM_FLOOR = 1e-12

_CHECKPOINT_FORMAT = "egomatch-checkpoint"
_TENSOR_NAMES = ("w1", "b1", "w2", "b2")


@dataclass(eq=False)
class ModelParameters:
    """Weights and biases of the two linear layers (input d -> hidden d_h)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def d(self) -> int:
        return self.w1.shape[0]

    @property
    def d_h(self) -> int:
        return self.w1.shape[1]

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy()
        )


@dataclass(frozen=True, eq=False)
class EmbeddingPair:
    h_e: np.ndarray
    h_n: np.ndarray


@dataclass(eq=False)
class Gradients:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


class PairRole(IntEnum):
    """How a (anchor, partner) pair enters the contrastive loss."""

    POSITIVE = 0           # anchor ego vs. its own neighbor features
    NEIGHBOR_NEGATIVE = 1  # anchor ego vs. another node's neighbor features
    EGO_NEGATIVE = 2       # anchor ego vs. another node's ego features


@dataclass(frozen=True, eq=False)
class PairBatch:
    """A batch of tagged contrastive pairs.

    ``anchor`` rows always go through layer 1. ``partner`` rows go through
    layer 2, except for ego-negative pairs whose partner is another node's
    ego features and therefore also goes through layer 1.
    """

    anchor: np.ndarray
    partner: np.ndarray
    roles: np.ndarray
    weights: np.ndarray


def init_parameters(d: int, d_h: int, rng: np.random.Generator) -> ModelParameters:
    """Uniform(-sqrt(6/(d+d_h)), +sqrt(6/(d+d_h))) weights, zero biases."""
    bound = np.sqrt(6.0 / (d + d_h))
    return ModelParameters(
        w1=rng.uniform(-bound, bound, size=(d, d_h)),
        b1=np.zeros(d_h),
        w2=rng.uniform(-bound, bound, size=(d, d_h)),
        b2=np.zeros(d_h),
    )


def _affine_rows(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # einsum without optimization: per-row bits independent of batch size
    return np.einsum("nd,dh->nh", x, w, optimize=False) + b


def _row_cosine(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    dots = np.einsum("nh,nh->n", u, v)
    nu = np.sqrt(np.einsum("nh,nh->n", u, u))
    nv = np.sqrt(np.einsum("nh,nh->n", v, v))
    ok = (nu >= NORM_FLOOR) & (nv >= NORM_FLOOR)
    denom = np.where(ok, nu * nv, 1.0)
    return np.where(ok, np.clip(dots / denom, -1.0, 1.0), 0.0)


def embed(params: ModelParameters, x_e: np.ndarray, x_n: np.ndarray) -> EmbeddingPair:
    """Affine embeddings of one ego/neighbor feature pair."""
    x_e = np.asarray(x_e, dtype=np.float64)
    x_n = np.asarray(x_n, dtype=np.float64)
    if x_e.shape != (params.d,) or x_n.shape != (params.d,):
        raise DimensionError(
            f"expected two vectors of length {params.d}, "
            f"got {x_e.shape} and {x_n.shape}"
        )
    h_e = _affine_rows(x_e[None, :], params.w1, params.b1)[0]
    h_n = _affine_rows(x_n[None, :], params.w2, params.b2)[0]
    return EmbeddingPair(h_e=h_e, h_n=h_n)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; 0 if either vector is near-zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError(f"expected equal-length vectors, got {u.shape}, {v.shape}")
    return float(_row_cosine(u[None, :], v[None, :])[0])


def remap(c):
    """Order-preserving affine map from [-1, 1] onto [0, 1]."""
    return (c + 1.0) * 0.5


def row_similarities(params: ModelParameters, x_ego: np.ndarray,
                     x_nbr: np.ndarray) -> np.ndarray:
    """Per-row ego-neighbor similarity for matched feature matrices."""
    x_ego = np.asarray(x_ego, dtype=np.float64)
    x_nbr = np.asarray(x_nbr, dtype=np.float64)
    if x_ego.shape != x_nbr.shape or x_ego.ndim != 2:
        raise DimensionError(
            f"expected matching (n, d) matrices, got {x_ego.shape}, {x_nbr.shape}"
        )
    if x_ego.shape[1] != params.d:
        raise DimensionError(
            f"model expects {params.d} input features, data has {x_ego.shape[1]}"
        )
    h_e = _affine_rows(x_ego, params.w1, params.b1)
    h_n = _affine_rows(x_nbr, params.w2, params.b2)
    return _row_cosine(h_e, h_n)


def pairwise_similarity(params: ModelParameters, x_e: np.ndarray,
                        x_n: np.ndarray) -> float:
    """Similarity of one pair; bit-identical to the batched path."""
    pair = embed(params, x_e, x_n)
    return float(_row_cosine(pair.h_e[None, :], pair.h_n[None, :])[0])


def ego_similarities(params: ModelParameters, x_a: np.ndarray,
                     x_b: np.ndarray) -> np.ndarray:
    """Per-row similarity of two ego-side matrices (both through layer 1)."""
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    if x_a.shape != x_b.shape or x_a.ndim != 2 or x_a.shape[1] != params.d:
        raise DimensionError(
            f"expected matching (n, {params.d}) matrices, "
            f"got {x_a.shape}, {x_b.shape}"
        )
    h_a = _affine_rows(x_a, params.w1, params.b1)
    h_b = _affine_rows(x_b, params.w1, params.b1)
    return _row_cosine(h_a, h_b)


def _cosine_rows_with_grad(u, v):
    """Row cosines plus the partial derivatives w.r.t. both embedding rows."""
    dots = np.einsum("nh,nh->n", u, v)
    nu_sq = np.einsum("nh,nh->n", u, u)
    nv_sq = np.einsum("nh,nh->n", v, v)
    nu = np.sqrt(nu_sq)
    nv = np.sqrt(nv_sq)
    ok = (nu >= NORM_FLOOR) & (nv >= NORM_FLOOR)
    inv_cross = np.where(ok, 1.0 / np.where(ok, nu * nv, 1.0), 0.0)
    c = np.where(ok, np.clip(dots * inv_cross, -1.0, 1.0), 0.0)
    inv_nu_sq = np.where(ok, 1.0 / np.where(ok, nu_sq, 1.0), 0.0)
    inv_nv_sq = np.where(ok, 1.0 / np.where(ok, nv_sq, 1.0), 0.0)
    # d c / d u = v/(|u||v|) - c * u/|u|^2 ; rows with ok=False get zeros
    du = v * inv_cross[:, None] - u * (c * inv_nu_sq)[:, None]
    dv = u * inv_cross[:, None] - v * (c * inv_nv_sq)[:, None]
    return c, du, dv


def _loss_rows_and_dc(c, positive_mask, weights, eps_clamp):
    """Per-pair loss and dLoss/dc for remapped, clamped similarities."""
    chat = np.clip(remap(c), eps_clamp, 1.0 - eps_clamp)
    loss = np.where(
        positive_mask,
        -weights * np.log(chat),
        -weights * np.log(1.0 - chat),
    )
    interior = (chat > eps_clamp) & (chat < 1.0 - eps_clamp)
    # the 0.5 is the derivative of the [-1,1] -> [0,1] remap
    dc = np.where(
        positive_mask, -weights / chat, weights / (1.0 - chat)
    ) * 0.5
    dc = np.where(interior, dc, 0.0)
    return loss, dc


def pair_losses(params: ModelParameters, batch: PairBatch,
                eps_clamp: float = 1e-7) -> np.ndarray:
    """Per-pair contrastive loss terms (used by gradient checks)."""
    loss, _, _, _ = _forward_pairs(params, batch, eps_clamp)
    return loss


def _forward_pairs(params, batch, eps_clamp):
    anchor = np.asarray(batch.anchor, dtype=np.float64)
    partner = np.asarray(batch.partner, dtype=np.float64)
    roles = np.asarray(batch.roles)
    weights = np.asarray(batch.weights, dtype=np.float64)
    if anchor.shape != partner.shape or anchor.ndim != 2:
        raise DimensionError(
            f"anchor/partner must be matching (B, d) matrices, "
            f"got {anchor.shape}, {partner.shape}"
        )
    if roles.shape != (anchor.shape[0],) or weights.shape != roles.shape:
        raise DimensionError(
            f"roles {roles.shape} and weights {weights.shape} must both have "
            f"one entry per pair ({anchor.shape[0]})"
        )
    u = anchor @ params.w1 + params.b1
    ego_side = roles == PairRole.EGO_NEGATIVE
    v = partner @ params.w2 + params.b2
    if ego_side.any():
        v_ego = partner @ params.w1 + params.b1
        v = np.where(ego_side[:, None], v_ego, v)
    c, du, dv = _cosine_rows_with_grad(u, v)
    positive = roles == PairRole.POSITIVE
    loss, dc = _loss_rows_and_dc(c, positive, weights, eps_clamp)
    return loss, dc[:, None] * du, dc[:, None] * dv, ego_side


def backward(params: ModelParameters, batch: PairBatch,
             eps_clamp: float = 1e-7) -> Gradients:
    """Exact gradients of the summed pair losses w.r.t. all parameters.

    Ego-negative pairs route both sides through layer 1. Degenerate
    embeddings (norm below :data:`NORM_FLOOR`) contribute zero gradient.
    """
    _, g_u, g_v, ego_side = _forward_pairs(params, batch, eps_clamp)
    anchor = np.asarray(batch.anchor, dtype=np.float64)
    partner = np.asarray(batch.partner, dtype=np.float64)
    grad_w1 = anchor.T @ g_u
    grad_b1 = g_u.sum(axis=0)
    layer2 = ~ego_side
    grad_w2 = partner[layer2].T @ g_v[layer2]
    grad_b2 = g_v[layer2].sum(axis=0)
    if ego_side.any():
        grad_w1 += partner[ego_side].T @ g_v[ego_side]
        grad_b1 = grad_b1 + g_v[ego_side].sum(axis=0)
    return Gradients(w1=grad_w1, b1=grad_b1, w2=grad_w2, b2=grad_b2)


def save_checkpoint(path, params: ModelParameters, meta: dict | None = None) -> None:
    """Write a self-describing binary checkpoint (bit-exact round-trip).

    One JSON header line (shapes, dtype, metadata) followed by the raw
    little-endian float64 buffers. Identical parameters always produce
    identical bytes, so checkpoints can be hashed for reproducibility.
    """
    header = {
        "format": _CHECKPOINT_FORMAT,
        "version": 1,
        "d": params.d,
        "d_h": params.d_h,
        "dtype": "<f8",
        "tensors": [
            [name, list(getattr(params, name).shape)] for name in _TENSOR_NAMES
        ],
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for name in _TENSOR_NAMES:
            fh.write(np.ascontiguousarray(getattr(params, name), dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ModelParameters, dict]:
    """Read a checkpoint; returns the parameters and the stored metadata."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise InputFormatError(f"{path}: not a checkpoint file") from None
        if header.get("format") != _CHECKPOINT_FORMAT:
            raise InputFormatError(f"{path}: not a checkpoint file")
        tensors = {}
        for name, shape in header["tensors"]:
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise InputFormatError(f"{path}: truncated tensor {name!r}")
            tensors[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    if set(tensors) != set(_TENSOR_NAMES):
        raise InputFormatError(f"{path}: checkpoint is missing tensors")
    params = ModelParameters(**{name: tensors[name] for name in _TENSOR_NAMES})
    return params, header.get("meta", {})
