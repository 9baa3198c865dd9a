"""Weighted K-nearest-neighbor graph over the covered examples.

Neighborhoods are asymmetric by default (each node keeps exactly its own K
nearest covered points); `symmetrize` produces the union edge set with
variable degrees. Edge weight is 1 / (1 + euclidean distance).
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import knn_exact
from .data_model import EmbeddingMatrix
from .errors import ParameterError


@dataclass(frozen=True)
class NeighborGraph:
    """Padded adjacency: row i lists graph-local neighbor ids, -1 past degrees[i]."""

    node_ids: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray
    symmetric: bool
    k: int

    def __post_init__(self):
        for name in ("node_ids", "neighbors", "weights", "degrees"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def num_nodes(self):
        return self.node_ids.size


def _as_covered_array(n, covered):
    if covered is None:
        return np.arange(n, dtype=np.int64)
    c = np.asarray(covered, dtype=np.int64).reshape(-1)
    if c.size == 0:
        raise ParameterError("covered set is empty")
    if (c < 0).any() or (c >= n).any():
        raise ParameterError(f"covered indices out of range [0,{n - 1}]")
    c = np.unique(c)
    return c


def knn_brute_force(emb, covered=None, k=20):
    """Exact K-NN graph among the covered rows of an embedding matrix.

    covered: optional index set (original row indices); None means all rows.
    Ties in distance go to the lower node index, self-edges are excluded.
    """
    values = emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb, dtype=np.float64)
    node_ids = _as_covered_array(values.shape[0], covered)
    n = node_ids.size
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < number of covered examples ({n}), got {k}")
    x = np.ascontiguousarray(values[node_ids])
    nbrs, dist = knn_exact(x, k)
    weights = 1.0 / (1.0 + dist)
    degrees = np.full(n, k, dtype=np.int64)
    return NeighborGraph(
        node_ids=node_ids,
        neighbors=nbrs,
        weights=weights,
        degrees=degrees,
        symmetric=False,
        k=int(k),
    )


def symmetrize(g):
    """Union edge set of a K-NN graph; degrees become variable (>= K).

    Weights are carried over unchanged (the weight of (j,i) equals that of
    (i,j)). Already-symmetric graphs are returned as-is.
    """
    if g.symmetric:
        return g
    n = g.num_nodes
    src = np.repeat(np.arange(n, dtype=np.int64), g.degrees)
    valid = g.neighbors >= 0
    dst = g.neighbors[valid]
    w = g.weights[valid]
    all_src = np.concatenate([src, dst])
    all_dst = np.concatenate([dst, src])
    all_w = np.concatenate([w, w])
    key = all_src * n + all_dst
    _, first = np.unique(key, return_index=True)
    us, ud, uw = all_src[first], all_dst[first], all_w[first]
    # group by source node, then weight descending (= distance ascending),
    # then neighbor id ascending
    order = np.lexsort((ud, -uw, us))
    us, ud, uw = us[order], ud[order], uw[order]
    degrees = np.bincount(us, minlength=n).astype(np.int64)
    kmax = int(degrees.max())
    neighbors = np.full((n, kmax), -1, dtype=np.int64)
    weights = np.zeros((n, kmax), dtype=np.float64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=offsets[1:])
    for i in range(n):
        lo, hi = offsets[i], offsets[i + 1]
        neighbors[i, : hi - lo] = ud[lo:hi]
        weights[i, : hi - lo] = uw[lo:hi]
    return NeighborGraph(
        node_ids=g.node_ids.copy(),
        neighbors=neighbors,
        weights=weights,
        degrees=degrees,
        symmetric=True,
        k=g.k,
    )


def dump_graph_csv(path, g):
    """Debug dump: one (src, dst, weight) row per edge, original example ids."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("src,dst,weight\n")
        for i in range(g.num_nodes):
            for j in range(g.degrees[i]):
                fh.write(
                    f"{g.node_ids[i]},{g.node_ids[g.neighbors[i, j]]},{float(g.weights[i, j])!r}\n"
                )
