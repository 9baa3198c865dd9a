"""Regularized multinomial logistic regression and the beta-coverage sweep.

Training standardizes features with the training-subset statistics and then
folds that transform into the returned weights, so the model applies directly
to raw features. All reductions go through einsum's fixed-order loops rather
than BLAS, keeping parameters bit-identical across runs and thread counts.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data_model import ABSTAIN, EmbeddingMatrix
from .errors import ParameterError
from .neighbor_graph import knn_brute_force, symmetrize
from .selectors import (
    cut_statistic_scores,
    entropy_scores,
    select_stratified,
    select_top_beta,
)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-2
    l2: float = 1e-4
    epochs: int = 100
    batch: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0 or self.l2 < 0:
            raise ParameterError("lr and l2 must be non-negative")
        if self.epochs < 1 or self.batch < 1:
            raise ParameterError("epochs and batch must be >= 1")


@dataclass(frozen=True)
class LinearModel:
    """C x d weights and length-C bias over raw (unstandardized) features."""

    weights: np.ndarray
    bias: np.ndarray
    loss_history: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, order="C", copy=True)
        b = np.array(self.bias, dtype=np.float64, copy=True).reshape(-1)
        if w.ndim != 2 or w.shape[0] != b.size:
            raise ParameterError(
                f"weights must be (C, d) with bias length C, got {w.shape} and {b.size}"
            )
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ParameterError("model parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        h = np.array(self.loss_history, dtype=np.float64, copy=True)
        h.setflags(write=False)
        object.__setattr__(self, "loss_history", h)

    def decision_values(self, features):
        x = np.asarray(features, dtype=np.float64)
        return np.einsum("nd,cd->nc", x, self.weights) + self.bias

    def predict(self, features):
        return np.argmax(self.decision_values(features), axis=1)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    balanced_error: float
    per_class_error: np.ndarray
    n_eval: int

    def __post_init__(self):
        pce = np.array(self.per_class_error, dtype=np.float64, copy=True)
        pce.setflags(write=False)
        object.__setattr__(self, "per_class_error", pce)


def _softmax_rows(logits):
    mx = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - mx)
    return e / e.sum(axis=1, keepdims=True)


def _loss_and_grad(w, b, x, y, l2):
    """Mean cross-entropy + (l2/2)||W||^2 and its gradient (oracle-testable)."""
    n = x.shape[0]
    logits = np.einsum("nd,cd->nc", x, w) + b
    probs = _softmax_rows(logits)
    nll = -np.log(probs[np.arange(n), y])
    loss = float(nll.mean()) + 0.5 * l2 * float((w * w).sum())
    delta = probs
    delta[np.arange(n), y] -= 1.0
    gw = np.einsum("nc,nd->cd", delta, x) / n + l2 * w
    gb = delta.sum(axis=0) / n
    return loss, gw, gb


def fit_logistic(features, targets, num_classes, cfg=None):
    """Mini-batch gradient descent on softmax cross-entropy + L2, from zeros.

    Features are standardized internally with this sample's statistics; the
    returned model has the transform folded in. The per-epoch mean training
    loss (in standardized coordinates) is kept on the model.
    """
    cfg = cfg or TrainConfig()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.int64).reshape(-1)
    n, d = x.shape
    if y.size != n:
        raise ParameterError("features and targets must align")
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    xs = (x - mu) / sd
    w = np.zeros((num_classes, d))
    b = np.zeros(num_classes)
    rng = np.random.default_rng(cfg.seed)
    history = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch):
            idx = perm[start : start + cfg.batch]
            loss, gw, gb = _loss_and_grad(w, b, xs[idx], y[idx], cfg.l2)
            w -= cfg.lr * gw
            b -= cfg.lr * gb
            total += loss * idx.size
        history[epoch] = total / n
    w_raw = w / sd[None, :]
    b_raw = b - np.einsum("cd,d->c", w_raw, mu)
    return LinearModel(weights=w_raw, bias=b_raw, loss_history=history)


def train(emb, selection, p, cfg=None):
    """Train on the selected subset's pseudolabels."""
    sel = np.asarray(selection.selected, dtype=np.int64)
    if sel.size == 0:
        raise ParameterError("selection is empty; nothing to train on")
    targets = p.hard[sel]
    if (targets == ABSTAIN).any():
        raise ParameterError("selected examples must all have hard labels")
    if np.unique(targets).size < 2:
        warnings.warn(
            "selection contains a single class; the model degenerates to a constant",
            stacklevel=2,
        )
    values = emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb, dtype=np.float64)
    return fit_logistic(values[sel], targets, p.num_classes, cfg)


def evaluate(model, emb, gold):
    """Accuracy and balanced error (mean per-class error) on a gold split."""
    values = emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.int64).reshape(-1)
    if gold.size == 0:
        raise ParameterError("empty evaluation split")
    if gold.size != values.shape[0]:
        raise ParameterError("embeddings and gold labels must align")
    preds = model.predict(values)
    accuracy = float((preds == gold).mean())
    c = model.weights.shape[0]
    per_class = np.full(c, np.nan)
    for y in range(c):
        mask = gold == y
        if mask.any():
            per_class[y] = float((preds[mask] != y).mean())
    balanced = float(np.nanmean(per_class))
    return EvalReport(
        accuracy=accuracy,
        balanced_error=balanced,
        per_class_error=per_class,
        n_eval=int(gold.size),
    )


DEFAULT_BETAS = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass(frozen=True)
class SelectorConfig:
    method: str = "cut"
    k: int = 20
    symmetric: bool = False
    stratified: bool = False
    prior: tuple | None = None

    def __post_init__(self):
        if self.method not in ("cut", "entropy"):
            raise ParameterError(f"unknown selector method {self.method!r}")
        if self.stratified and self.prior is None:
            raise ParameterError("stratified selection requires a class prior")


def compute_scores(dataset, p, selector_cfg):
    """Score the covered examples of a dataset under a selector config."""
    covered = p.covered()
    if selector_cfg.method == "entropy":
        return entropy_scores(p), covered
    g = knn_brute_force(dataset.embeddings, covered, selector_cfg.k)
    if selector_cfg.symmetric:
        g = symmetrize(g)
    return cut_statistic_scores(g, p), covered


def _select(scores, node_ids, p, beta, selector_cfg):
    if selector_cfg.stratified:
        prior = np.asarray(selector_cfg.prior, dtype=np.float64)
        return select_stratified(scores, p, beta, prior, method=selector_cfg.method)
    return select_top_beta(scores, beta, node_ids=node_ids, method=selector_cfg.method)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    best_index: int

    @property
    def best(self):
        return self.rows[self.best_index]


def beta_sweep(dataset, p, selector_cfg, betas=DEFAULT_BETAS, train_cfg=None,
               val=None, test=None):
    """Select, train, and evaluate across a beta grid.

    val is a required (embeddings, gold) pair used to pick the best beta
    (first maximum of validation accuracy); test is an optional pair reported
    alongside. Subset pseudolabel accuracy is filled in when the training
    dataset carries gold labels.
    """
    if val is None:
        raise ParameterError("beta sweep requires validation embeddings and gold labels")
    if len(tuple(betas)) == 0:
        raise ParameterError("betas must be non-empty")
    val_emb, val_gold = val
    scores, covered = compute_scores(dataset, p, selector_cfg)
    rows = []
    for beta in betas:
        selection = _select(scores, covered, p, beta, selector_cfg)
        sel = selection.selected
        if dataset.gold is not None and sel.size:
            subset_acc = float((p.hard[sel] == dataset.gold[sel]).mean())
        else:
            subset_acc = float("nan")
        model = train(dataset.embeddings, selection, p, train_cfg)
        val_report = evaluate(model, val_emb, val_gold)
        if test is not None:
            test_report = evaluate(model, test[0], test[1])
            test_acc = test_report.accuracy
            bal_err = test_report.balanced_error
        else:
            test_acc = float("nan")
            bal_err = float("nan")
        rows.append(
            {
                "beta": float(beta),
                "n_selected": int(sel.size),
                "subset_label_accuracy": subset_acc,
                "val_accuracy": val_report.accuracy,
                "test_accuracy": test_acc,
                "balanced_error": bal_err,
            }
        )
    best = 0
    for i, row in enumerate(rows):
        if row["val_accuracy"] > rows[best]["val_accuracy"]:
            best = i
    return SweepResult(rows=tuple(rows), best_index=best)
