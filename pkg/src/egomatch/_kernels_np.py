"""Pure-numpy fallback for the sparse row-sum kernel.

Segment sums are computed with ``np.add.reduceat`` over a gathered copy of
the operand rows; the gather is chunked column-wise so the temporary stays
bounded. Output is deterministic run to run; it can differ from the
compiled kernel in the last bits because reduceat accumulates pairwise.
"""
import numpy as np

# cap (in float64 elements) on the gathered temporary
_GATHER_BUDGET = 16 * 1024 * 1024


def adj_rowsum(indptr, indices, v, out=None):
    """Row sums over stored neighbors: ``out[i] = sum(v[j] for j in N(i))``."""
    n = indptr.shape[0] - 1
    ncols = v.shape[1]
    if out is None:
        out = np.empty((n, ncols), dtype=np.float64)
    if indices.size == 0:
        out[:] = 0.0
        return out

    starts = indptr[:-1]
    empty = starts == indptr[1:]
    chunk = max(1, int(_GATHER_BUDGET // (indices.size + 1)))
    pad = np.zeros((1, min(chunk, ncols)), dtype=np.float64)
    for c0 in range(0, ncols, chunk):
        c1 = min(c0 + chunk, ncols)
        # one trailing zero row makes every indptr value a valid boundary
        gathered = np.concatenate([v[indices, c0:c1], pad[:, : c1 - c0]], axis=0)
        out[:, c0:c1] = np.add.reduceat(gathered, starts, axis=0)
    out[empty] = 0.0
    return out
