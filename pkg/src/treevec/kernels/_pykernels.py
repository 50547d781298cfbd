"""Pure-numpy fallback for the gather/scatter kernels.

Same contracts as the compiled extension. np.add.at is the slow path that
the Cython kernel exists to replace; correctness is identical.
"""

import numpy as np

BACKEND_NAME = "python"


def index_add_rows(out, idx, values):
    """out[idx[i], :] += values[i, :], accumulating over repeated indices."""
    np.add.at(out, idx, values)
    return out


def segment_max_rows(values, seg_ids, groups):
    """Per-column maximum of the rows in each segment.

    Returns (out, arg): out[g, j] is the max over rows r with
    seg_ids[r] == g; arg[g, j] is the (smallest) row index attaining it,
    or -1 for an empty segment (whose output row is 0).
    """
    n, d = values.shape
    out = np.zeros((groups, d), dtype=values.dtype)
    arg = np.full((groups, d), -1, dtype=np.int64)
    order = np.argsort(seg_ids, kind="stable")
    sorted_ids = seg_ids[order]
    bounds = np.searchsorted(sorted_ids, np.arange(groups + 1))
    cols = np.arange(d)
    for g in range(groups):
        rows = order[bounds[g]:bounds[g + 1]]
        if rows.size == 0:
            continue
        block = values[rows]
        am = block.argmax(axis=0)
        out[g] = block[am, cols]
        arg[g] = rows[am]
    return out, arg
