"""Exact brute-force k-nearest-neighbor kernels.

Two interchangeable implementations: a numba @njit kernel (parallel over query
blocks, each block handled by exactly one thread, so results do not depend on
the thread count) and a pure-numpy twin. Both accumulate squared distances
coordinate by coordinate in the same order, so the two backends agree bitwise.
Both resolve distance ties by the lower candidate index and both return
neighbors sorted ascending by (distance, index).

Selection: set CUTSELECT_BACKEND=numba or CUTSELECT_BACKEND=numpy before
import; unset, the numba kernel is used when numba imports cleanly.
"""

import os

import numpy as np

from .errors import ParameterError

_QUERY_TILE = 64
_CAND_TILE = 128


def knn_topk_numpy(x, k, block=256):
    """Exact k-NN by full pairwise distances, numpy only, row blocks."""
    n, d = x.shape
    nbrs = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, block):
        stop = min(n, start + block)
        d2 = np.zeros((stop - start, n), dtype=np.float64)
        for t in range(d):
            diff = x[start:stop, t][:, None] - x[:, t][None, :]
            d2 += diff * diff
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        for r in range(stop - start):
            row = d2[r]
            kth = np.partition(row, k - 1)[k - 1]
            cand = np.flatnonzero(row < kth)
            need = k - cand.size
            if need > 0:
                ties = np.flatnonzero(row == kth)[:need]
                cand = np.concatenate([cand, ties])
            order = cand[np.lexsort((cand, row[cand]))]
            nbrs[start + r] = order
            dist[start + r] = np.sqrt(row[order])
    return nbrs, dist


try:
    if os.environ.get("CUTSELECT_BACKEND", "").strip().lower() == "numpy":
        raise ImportError("numpy backend forced by CUTSELECT_BACKEND")
    from numba import njit, prange

    @njit(parallel=True, cache=True)
    def _knn_topk_njit(x, k):
        n, d = x.shape
        # column-major copy keeps the candidate-tile loads contiguous
        xt = np.empty((d, n), dtype=np.float64)
        for t in range(d):
            for j in range(n):
                xt[t, j] = x[j, t]
        nbrs = np.empty((n, k), dtype=np.int64)
        dist = np.empty((n, k), dtype=np.float64)
        nqb = (n + _QUERY_TILE - 1) // _QUERY_TILE
        for qb in prange(nqb):
            i0 = qb * _QUERY_TILE
            i1 = min(n, i0 + _QUERY_TILE)
            nq = i1 - i0
            bestd = np.full((nq, k), np.inf)
            besti = np.full((nq, k), -1, dtype=np.int64)
            buf = np.empty((nq, _CAND_TILE), dtype=np.float64)
            for j0 in range(0, n, _CAND_TILE):
                j1 = min(n, j0 + _CAND_TILE)
                w = j1 - j0
                for qi in range(nq):
                    b = buf[qi]
                    for jj in range(w):
                        b[jj] = 0.0
                for t in range(d):
                    # 1-d row views keep the inner loop vectorizable
                    xr = xt[t, j0:j1]
                    for qi in range(nq):
                        q = x[i0 + qi, t]
                        b = buf[qi]
                        for jj in range(w):
                            diff = q - xr[jj]
                            b[jj] += diff * diff
                for qi in range(nq):
                    i = i0 + qi
                    bd = bestd[qi]
                    bi = besti[qi]
                    for jj in range(w):
                        j = j0 + jj
                        if j == i:
                            continue
                        acc = buf[qi, jj]
                        if acc < bd[k - 1] or (acc == bd[k - 1] and j < bi[k - 1]):
                            pos = k - 1
                            while pos > 0 and (
                                acc < bd[pos - 1]
                                or (acc == bd[pos - 1] and j < bi[pos - 1])
                            ):
                                bd[pos] = bd[pos - 1]
                                bi[pos] = bi[pos - 1]
                                pos -= 1
                            bd[pos] = acc
                            bi[pos] = j
            for qi in range(nq):
                for m in range(k):
                    nbrs[i0 + qi, m] = besti[qi, m]
                    dist[i0 + qi, m] = np.sqrt(bestd[qi, m])
        return nbrs, dist

    def knn_topk_numba(x, k):
        return _knn_topk_njit(np.ascontiguousarray(x), k)

    BACKEND = "numba"
    knn_topk = knn_topk_numba
except ImportError:
    BACKEND = "numpy"
    knn_topk_numba = None
    knn_topk = knn_topk_numpy


def backend_name():
    return BACKEND


def knn_exact(x, k):
    """Dispatch to the active backend after validating shapes."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ParameterError(f"points must be 2-d, got shape {x.shape}")
    n = x.shape[0]
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < n, got k={k} with n={n}")
    return knn_topk(x, int(k))
