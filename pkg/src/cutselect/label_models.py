"""Aggregation of labeling-function outputs into pseudolabels.

Two label models: majority vote over non-abstaining functions, and a
Dawid-Skene mixture fit by EM with an explicit abstain emission column.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data_model import ABSTAIN, PseudoLabeling
from .errors import DegenerateError, ParameterError


def majority_vote(labels):
    """Most common non-abstain label per row, ties to the lowest class index.

    Rows where every labeling function abstains get hard = -1; their soft row
    is uniform so the distribution stays normalized.
    """
    v = labels.values
    c = labels.num_classes
    counts = np.empty((labels.n, c), dtype=np.int64)
    for y in range(c):
        counts[:, y] = (v == y).sum(axis=1)
    totals = counts.sum(axis=1)
    covered = totals > 0
    soft = np.full((labels.n, c), 1.0 / c)
    soft[covered] = counts[covered] / totals[covered, None].astype(np.float64)
    hard = np.where(covered, np.argmax(counts, axis=1), ABSTAIN)
    return PseudoLabeling(hard=hard, num_classes=c, soft=soft)


def class_marginals(p):
    """Empirical class frequencies of the hard labels over covered examples."""
    cov = p.hard != ABSTAIN
    if not cov.any():
        raise DegenerateError("all examples abstain; class marginals are undefined")
    counts = np.bincount(p.hard[cov], minlength=p.num_classes).astype(np.float64)
    return counts / counts.sum()


@dataclass(frozen=True)
class DawidSkeneModel:
    """Class prior plus per-labeler confusion tensors.

    confusion[k][y][c] = P[labeler k emits c | true class y], where column
    C (the last one) is the abstain emission.
    """

    class_prior: np.ndarray
    confusion: np.ndarray
    log_likelihood_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    n_iters: int = 0
    converged: bool = False

    def __post_init__(self):
        prior = np.array(self.class_prior, dtype=np.float64, copy=True)
        conf = np.array(self.confusion, dtype=np.float64, copy=True)
        if prior.ndim != 1 or conf.ndim != 3:
            raise ParameterError("class_prior must be 1-d and confusion 3-d")
        c = prior.size
        if conf.shape[1] != c or conf.shape[2] != c + 1:
            raise ParameterError(
                f"confusion must have shape (m, {c}, {c + 1}), got {conf.shape}"
            )
        if (prior < 0).any() or abs(prior.sum() - 1.0) > 1e-8:
            raise ParameterError("class_prior must be non-negative and sum to 1")
        row_sums = conf.sum(axis=2)
        if (conf < 0).any() or (np.abs(row_sums - 1.0) > 1e-8).any():
            raise ParameterError("confusion rows must be non-negative and sum to 1")
        prior.setflags(write=False)
        conf.setflags(write=False)
        object.__setattr__(self, "class_prior", prior)
        object.__setattr__(self, "confusion", conf)
        hist = np.array(self.log_likelihood_history, dtype=np.float64, copy=True)
        hist.setflags(write=False)
        object.__setattr__(self, "log_likelihood_history", hist)

    @property
    def num_classes(self):
        return self.class_prior.size

    @property
    def num_labelers(self):
        return self.confusion.shape[0]


def _emission_index(labels):
    # abstain (-1) becomes emission column C
    e = labels.values.copy()
    e[e == ABSTAIN] = labels.num_classes
    return e


def _log_joint(emissions, log_prior, log_conf):
    n, m = emissions.shape
    ll = np.tile(log_prior, (n, 1))
    for k in range(m):
        ll += log_conf[k][:, emissions[:, k]].T
    return ll


def _normalize_log_posteriors(ll):
    mx = ll.max(axis=1, keepdims=True)
    stable = np.exp(ll - mx)
    z = stable.sum(axis=1, keepdims=True)
    post = stable / z
    row_ll = (mx + np.log(z))[:, 0]
    return post, row_ll


def dawid_skene_fit(labels, max_iters=100, tol=1e-6, seed=0):
    """Fit the Dawid-Skene model by EM.

    Posteriors start from majority-vote soft labels. Each M-step applies a
    Laplace pseudo-count of 1.0 to the confusion counts. Convergence is a
    change in mean per-example log-likelihood below tol. The seed is reserved
    for degenerate fallbacks and has no effect on the standard path.
    """
    del seed
    if max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    v = labels.values
    c = labels.num_classes
    n, m = v.shape
    if not (v != ABSTAIN).any():
        raise DegenerateError("label matrix is entirely abstains; cannot fit")
    for y in range(c):
        if not (v == y).any():
            warnings.warn(
                f"class {y} is never voted for by any labeling function; "
                "its confusion rows fall back to the smoothing prior",
                stacklevel=2,
            )
    emissions = _emission_index(labels)
    onehot = np.zeros((n, m, c + 1), dtype=np.float64)
    rows = np.repeat(np.arange(n), m)
    cols = np.tile(np.arange(m), n)
    onehot[rows, cols, emissions.reshape(-1)] = 1.0

    post = majority_vote(labels).soft.copy()
    history = []
    prev_ll = None
    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        # M-step
        prior = post.mean(axis=0)
        prior = prior / prior.sum()
        counts = np.einsum("iy,ike->kye", post, onehot)
        counts += 1.0
        conf = counts / counts.sum(axis=2, keepdims=True)
        # E-step under the new parameters
        with np.errstate(divide="ignore"):
            log_prior = np.log(prior)
            log_conf = np.log(conf)
        ll = _log_joint(emissions, log_prior, log_conf)
        post, row_ll = _normalize_log_posteriors(ll)
        mean_ll = float(row_ll.mean())
        history.append(mean_ll)
        if prev_ll is not None and abs(mean_ll - prev_ll) < tol:
            converged = True
            break
        prev_ll = mean_ll
    return DawidSkeneModel(
        class_prior=prior,
        confusion=conf,
        log_likelihood_history=np.array(history),
        n_iters=iters,
        converged=converged,
    )


def dawid_skene_posteriors(model, labels):
    """Posterior pseudolabels under a fitted model.

    Rows where every labeling function abstains get soft = class_prior and
    hard = -1; all other rows get hard = argmax of the posterior.
    """
    if labels.m != model.num_labelers:
        raise ParameterError(
            f"model has {model.num_labelers} labelers, matrix has {labels.m}"
        )
    if labels.num_classes != model.num_classes:
        raise ParameterError(
            f"model has {model.num_classes} classes, matrix has {labels.num_classes}"
        )
    emissions = _emission_index(labels)
    with np.errstate(divide="ignore"):
        log_prior = np.log(model.class_prior)
        log_conf = np.log(model.confusion)
    ll = _log_joint(emissions, log_prior, log_conf)
    post, _ = _normalize_log_posteriors(ll)
    covered = (labels.values != ABSTAIN).any(axis=1)
    post[~covered] = model.class_prior
    hard = np.where(covered, np.argmax(post, axis=1), ABSTAIN)
    return PseudoLabeling(hard=hard, num_classes=model.num_classes, soft=post)


def model_to_json(model):
    """Deterministic key-sorted JSON dump of a fitted model."""
    doc = {
        "class_prior": model.class_prior.tolist(),
        "confusion": model.confusion.tolist(),
        "converged": bool(model.converged),
        "n_iters": int(model.n_iters),
        "num_classes": int(model.num_classes),
        "num_labelers": int(model.num_labelers),
    }
    return json.dumps(doc, sort_keys=True)
