"""Independent reference implementations used only by the tests.

Everything here is deliberately naive (dense matrices, explicit loops,
brute-force pair counting) and shares no code with the package paths it
checks.
"""
import numpy as np


def dense_adjacency_from_pairs(pairs, n):
    """Naive reader semantics: symmetrize, drop self-loops and duplicates."""
    a = np.zeros((n, n))
    for i, j in np.asarray(pairs).reshape(-1, 2):
        if i != j:
            a[i, j] = 1.0
            a[j, i] = 1.0
    return a


def dense_adjacency(g):
    """Dense reconstruction of a CSR graph."""
    a = np.zeros((g.n, g.n))
    for i in range(g.n):
        a[i, g.indices[g.indptr[i]:g.indptr[i + 1]]] = 1.0
    return a


def dense_normalized_adjacency(a):
    """D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I."""
    a_tilde = a + np.eye(a.shape[0])
    d_inv_sqrt = np.diag(1.0 / np.sqrt(a_tilde.sum(axis=1)))
    return d_inv_sqrt @ a_tilde @ d_inv_sqrt


def dense_masked_propagation(a, x, k):
    """(M * S^k) X where M is all-ones with a zero diagonal."""
    s_k = np.linalg.matrix_power(dense_normalized_adjacency(a), k).copy()
    np.fill_diagonal(s_k, 0.0)
    return s_k @ x


def naive_affine(x, w, b):
    """Triple-loop vector-matrix product plus bias, pure Python floats."""
    d, h = w.shape
    out = [0.0] * h
    for j in range(h):
        acc = 0.0
        for i in range(d):
            acc += float(x[i]) * float(w[i, j])
        out[j] = acc + float(b[j])
    return np.array(out)


def naive_cosine(u, v):
    dot = sum(float(a) * float(b) for a, b in zip(u, v))
    nu = sum(float(a) * float(a) for a in u) ** 0.5
    nv = sum(float(b) * float(b) for b in v) ** 0.5
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    return max(-1.0, min(1.0, dot / (nu * nv)))


def finite_difference_gradients(loss_fn, params, step=1e-5):
    """Central differences of ``loss_fn(params)`` w.r.t. every entry."""
    grads = {}
    for name in ("w1", "b1", "w2", "b2"):
        arr = getattr(params, name)
        out = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            original = arr[idx]
            arr[idx] = original + step
            up = loss_fn(params)
            arr[idx] = original - step
            down = loss_fn(params)
            arr[idx] = original
            out[idx] = (up - down) / (2.0 * step)
        grads[name] = out
    return grads


def gradient_relative_error(analytic, fd):
    a = np.concatenate([np.asarray(getattr(analytic, n)).ravel()
                        for n in ("w1", "b1", "w2", "b2")])
    f = np.concatenate([np.asarray(fd[n]).ravel()
                        for n in ("w1", "b1", "w2", "b2")])
    return np.linalg.norm(a - f) / max(np.linalg.norm(f), 1e-12)


def auc_pair_count(scores, labels):
    """Brute-force Mann-Whitney: all (anomaly, normal) pairs, ties get 0.5."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def trapezoid_area(points):
    points = np.asarray(points, dtype=np.float64)
    x, y = points[:, 0], points[:, 1]
    return float((0.5 * (y[1:] + y[:-1]) * (x[1:] - x[:-1])).sum())
