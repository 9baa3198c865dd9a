"""Ranking of covered examples and materialization of top-beta subsets.

Two scores over the covered set, lower is better for both:

* cut statistic: standardized weighted mass of neighbor-graph edges whose
  endpoints disagree, against the null that labels were assigned i.i.d.
  from the empirical class marginals;
* entropy: Shannon entropy (nats) of the soft pseudolabel.

Selection keeps the int(beta * N) lowest scores, ties resolved by the lower
original example index.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .data_model import EmbeddingMatrix, PseudoLabeling
from .errors import DegenerateError, MethodUnavailableError, ParameterError
from .label_models import class_marginals


def entropy_scores(p):
    """Shannon entropy in nats of each covered example's soft label."""
    if p.soft is None:
        raise MethodUnavailableError(
            "selector requires soft labels; this pseudolabeling is hard-only"
        )
    s = p.soft[p.covered()]
    plogp = np.zeros_like(s)
    pos = s > 0
    plogp[pos] = s[pos] * np.log(s[pos])
    return -plogp.sum(axis=1)


def _check_graph_matches(g, p):
    if not np.array_equal(g.node_ids, p.covered()):
        raise ParameterError("graph nodes must be exactly the covered examples")


def _node_stats(g, node_labels, marginals):
    """Per-node (J, sum_w, sum_w2, p_own) under the padded adjacency."""
    nbr = np.maximum(g.neighbors, 0)
    valid = g.neighbors >= 0
    nbr_labels = node_labels[nbr]
    disagree = (nbr_labels != node_labels[:, None]) & valid
    j_stat = (g.weights * disagree).sum(axis=1)
    sum_w = g.weights.sum(axis=1)
    sum_w2 = (g.weights * g.weights).sum(axis=1)
    p_own = marginals[node_labels]
    return j_stat, sum_w, sum_w2, p_own


def cut_statistic_scores(g, p):
    """Z-score of each node's disagreement-edge mass; lower is better.

    J_i sums w_ij over neighbors with a different hard label. Under the
    i.i.d.-label null its mean is (1 - P[y_i]) * sum_j w_ij and its variance
    P[y_i] (1 - P[y_i]) * sum_j w_ij^2, with P[y_i] the empirical marginal of
    node i's own label over the covered set.
    """
    _check_graph_matches(g, p)
    marginals = class_marginals(p)
    node_labels = p.hard[g.node_ids]
    if np.unique(node_labels).size < 2:
        raise DegenerateError(
            "pseudolabels contain a single class; the cut-statistic variance "
            "is zero and ranking is undefined, use beta=1.0 instead"
        )
    j_stat, sum_w, sum_w2, p_own = _node_stats(g, node_labels, marginals)
    mu = (1.0 - p_own) * sum_w
    sigma = np.sqrt(p_own * (1.0 - p_own) * sum_w2)
    return (j_stat - mu) / sigma


def cut_statistic_score_with_reference(ref_emb, ref_pseudo, query_embedding, query_label, k):
    """Cut-statistic Z of a single query inserted alone into a reference sample.

    The query's neighborhood is its k nearest covered reference points and the
    null uses the reference marginals, so scores of distinct queries are
    mutually independent.
    """
    values = (
        ref_emb.values if isinstance(ref_emb, EmbeddingMatrix) else np.asarray(ref_emb, dtype=np.float64)
    )
    cov = ref_pseudo.covered()
    if k >= cov.size:
        raise ParameterError(
            f"k must be smaller than the covered reference size ({cov.size}), got {k}"
        )
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    query_label = int(query_label)
    if not 0 <= query_label < ref_pseudo.num_classes:
        raise ParameterError(f"query label {query_label} out of range")
    marginals = class_marginals(ref_pseudo)
    if np.count_nonzero(marginals > 0) < 2:
        raise DegenerateError(
            "reference pseudolabels contain a single class; use beta=1.0 instead"
        )
    p_own = marginals[query_label]
    if p_own == 0.0 or p_own == 1.0:
        raise DegenerateError(
            f"query label {query_label} has reference marginal {p_own}; Z is undefined"
        )
    x = values[cov]
    q = np.asarray(query_embedding, dtype=np.float64).reshape(-1)
    if q.size != x.shape[1]:
        raise ParameterError(
            f"query has {q.size} coordinates, reference has {x.shape[1]}"
        )
    d2 = np.zeros(x.shape[0])
    for t in range(q.size):
        diff = x[:, t] - q[t]
        d2 += diff * diff
    order = np.lexsort((np.arange(x.shape[0]), d2))[:k]
    w = 1.0 / (1.0 + np.sqrt(d2[order]))
    disagree = ref_pseudo.hard[cov[order]] != query_label
    j_stat = float((w * disagree).sum())
    mu = (1.0 - p_own) * w.sum()
    sigma = np.sqrt(p_own * (1.0 - p_own) * (w * w).sum())
    return (j_stat - mu) / float(sigma)


@dataclass(frozen=True)
class ScoredSelection:
    """A ranking over covered examples and the subset kept at a given beta.

    scores align with node_ids; order sorts positions ascending by
    (score, original index); selected holds original example indices.
    """

    scores: np.ndarray
    order: np.ndarray
    selected: np.ndarray
    node_ids: np.ndarray
    beta: float
    method: str
    stratified: bool = False

    def __post_init__(self):
        if self.method not in ("cut", "entropy"):
            raise ParameterError(f"unknown method {self.method!r}")
        if not np.isfinite(self.scores).all():
            raise ParameterError("scores must be finite")
        n = self.scores.size
        if not np.array_equal(np.sort(self.order), np.arange(n)):
            raise ParameterError("order must be a permutation of 0..N-1")
        ranked = self.scores[self.order]
        if (np.diff(ranked) < 0).any():
            raise ParameterError("scores[order] must be non-decreasing")
        if not self.stratified and self.selected.size != int(self.beta * n):
            raise ParameterError(
                f"selected size {self.selected.size} != int(beta * N) = {int(self.beta * n)}"
            )
        for name in ("scores", "order", "selected", "node_ids"):
            getattr(self, name).setflags(write=False)

    @property
    def num_scored(self):
        return self.scores.size


def _ranking(scores, node_ids):
    return np.lexsort((node_ids, scores))


def select_top_beta(scores, beta, node_ids=None, method="cut"):
    """Keep the int(beta * N) lowest-score examples, ties to lower index."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta must be in (0, 1], got {beta}")
    n = scores.size
    if node_ids is None:
        node_ids = np.arange(n, dtype=np.int64)
    else:
        node_ids = np.asarray(node_ids, dtype=np.int64).reshape(-1)
        if node_ids.size != n:
            raise ParameterError("node_ids must align with scores")
    order = _ranking(scores, node_ids)
    n_sel = int(beta * n)
    selected = node_ids[order[:n_sel]]
    return ScoredSelection(
        scores=scores.copy(),
        order=order,
        selected=selected,
        node_ids=node_ids.copy(),
        beta=float(beta),
        method=method,
    )


def select_stratified(scores, p, beta, class_prior, method="cut"):
    """Per-class top selection: int(beta * prior[y] * N) from each stratum.

    Strata are the pseudolabel classes over the covered set; quotas use the
    total covered count N. An empty (or short) stratum with positive prior
    contributes what it has, with a warning.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta must be in (0, 1], got {beta}")
    prior = np.asarray(class_prior, dtype=np.float64).reshape(-1)
    if prior.size != p.num_classes:
        raise ParameterError(
            f"class_prior must have length {p.num_classes}, got {prior.size}"
        )
    if (prior < 0).any() or abs(prior.sum() - 1.0) > 1e-6:
        raise ParameterError("class_prior must be non-negative and sum to 1")
    node_ids = p.covered()
    n = node_ids.size
    if scores.size != n:
        raise ParameterError("scores must align with the covered examples")
    labels_cov = p.hard[node_ids]
    order = _ranking(scores, node_ids)
    keep = np.zeros(n, dtype=bool)
    for y in range(p.num_classes):
        quota = int(beta * prior[y] * n)
        stratum = order[labels_cov[order] == y]
        if quota > stratum.size:
            warnings.warn(
                f"stratum for class {y} has {stratum.size} examples, quota is {quota}; "
                "taking all of it",
                stacklevel=2,
            )
            quota = stratum.size
        keep[stratum[:quota]] = True
    selected = node_ids[order[keep[order]]]
    return ScoredSelection(
        scores=scores.copy(),
        order=order,
        selected=selected,
        node_ids=node_ids.copy(),
        beta=float(beta),
        method=method,
        stratified=True,
    )


def relabel_by_neighbors(g, p, scores, beta):
    """Relabel the noisiest beta fraction by their neighbors' majority label.

    The int(beta * N) largest scores (reversed ranking) get hard label = mode
    of their graph neighbors' current hard labels, all updates computed from
    the pre-update snapshot; a tied mode keeps the original label. Returns a
    hard-only pseudolabeling.
    """
    _check_graph_matches(g, p)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size != g.num_nodes:
        raise ParameterError("scores must align with graph nodes")
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta must be in [0, 1], got {beta}")
    node_labels = p.hard[g.node_ids]
    order_desc = np.lexsort((g.node_ids, -scores))
    n_rel = int(beta * g.num_nodes)
    new_hard = p.hard.copy()
    for pos in order_desc[:n_rel]:
        deg = g.degrees[pos]
        votes = np.bincount(node_labels[g.neighbors[pos, :deg]], minlength=p.num_classes)
        top = votes.max()
        winners = np.flatnonzero(votes == top)
        if winners.size == 1:
            new_hard[g.node_ids[pos]] = winners[0]
    return PseudoLabeling(hard=new_hard, num_classes=p.num_classes, soft=None)
