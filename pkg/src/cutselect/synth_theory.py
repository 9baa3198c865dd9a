"""Synthetic two-view class-conditional-noise generator and theory checks.

The feature view is a two-component spherical Gaussian mixture at
+-(sep/2) along the first coordinate, so a linear classifier is Bayes-optimal
and noise effects are isolated. Pseudolabels carry class-conditional noise
(alpha = P[Y=0 | pseudo=1], gamma = P[Y=1 | pseudo=0]) that is either
independent of the features given the true label, or concentrated near the
decision boundary when boundary_noise is set.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .data_model import ABSTAIN
from .end_model import evaluate, fit_logistic
from .errors import DegenerateError, ParameterError


@dataclass(frozen=True)
class TwoViewConfig:
    n: int
    alpha: float
    gamma: float
    abstain_rate: float = 0.0
    class_prior: float = 0.5
    view1_dim: int = 2
    cluster_sep: float = 2.0
    boundary_noise: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        for name in ("alpha", "gamma", "abstain_rate"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ParameterError(f"{name} must be in [0, 1), got {v}")
        if self.alpha + self.gamma >= 1.0:
            raise ParameterError(
                f"alpha + gamma must be < 1, got {self.alpha + self.gamma}"
            )
        if not 0.0 < self.class_prior < 1.0:
            raise ParameterError(f"class_prior must be in (0, 1), got {self.class_prior}")
        if not self.gamma <= self.class_prior <= 1.0 - self.alpha:
            raise ParameterError(
                "class_prior must lie in [gamma, 1 - alpha] for the noise rates "
                f"to be realizable, got prior={self.class_prior}, "
                f"alpha={self.alpha}, gamma={self.gamma}"
            )
        if self.view1_dim < 1:
            raise ParameterError(f"view1_dim must be >= 1, got {self.view1_dim}")
        if self.cluster_sep < 0:
            raise ParameterError(f"cluster_sep must be >= 0, got {self.cluster_sep}")

    @property
    def pseudo_positive_rate(self):
        """q = P[pseudo = 1] implied by (alpha, gamma, class_prior)."""
        return (self.class_prior - self.gamma) / (1.0 - self.alpha - self.gamma)


@dataclass(frozen=True)
class TwoViewSample:
    features: np.ndarray
    pseudo: np.ndarray
    gold: np.ndarray
    config: TwoViewConfig

    def __post_init__(self):
        for name in ("features", "pseudo", "gold"):
            getattr(self, name).setflags(write=False)

    def covered(self):
        return np.flatnonzero(self.pseudo != ABSTAIN)


def _sanity_check_rates(sample):
    cfg = sample.config
    cov = sample.covered()
    if cov.size == 0:
        return
    for value, name, mask in (
        (cfg.alpha, "alpha", sample.pseudo[cov] == 1),
        (cfg.gamma, "gamma", sample.pseudo[cov] == 0),
    ):
        if not mask.any():
            continue
        wrong = (sample.gold[cov][mask] != sample.pseudo[cov][mask]).mean()
        band = 3.0 * np.sqrt(max(value * (1.0 - value), 1e-12) / mask.sum())
        if abs(wrong - value) > max(band, 3.0 / mask.sum()):
            warnings.warn(
                f"empirical {name}={wrong:.4f} outside the sanity band around "
                f"{value} (n_cov={cov.size})",
                stacklevel=3,
            )


def _calibrate_log_scale(absx1, tau, target):
    """Bisect u = log(c) so that mean(exp(min(0, u - |x1|/tau))) == target."""
    if target <= 0.0:
        return -np.inf
    r = absx1 / tau
    lo, hi = -746.0, float(r.max()) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        mean = np.exp(np.minimum(0.0, mid - r)).mean()
        if mean < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate(cfg, seed):
    """Draw a TwoViewSample; identical (cfg, seed) give identical samples.

    Independence regime: pseudo ~ Bernoulli(q), gold flips with the
    conditional rates, features drawn given gold, so pseudolabel errors are
    conditionally independent of the features. Boundary regime: gold comes
    first, features next, then flips with probability
    min(1, c_y * exp(-|x1| / tau)), tau = sep/4, with c_y bisected per class
    on this sample so the class-conditional flip rates hit their targets.
    Abstention is an independent Bernoulli mask in both regimes.
    """
    rng = np.random.default_rng(seed)
    n, d = cfg.n, cfg.view1_dim
    half = 0.5 * cfg.cluster_sep
    covered = rng.random(n) >= cfg.abstain_rate
    if cfg.boundary_noise:
        gold = (rng.random(n) < cfg.class_prior).astype(np.int64)
        features = rng.standard_normal((n, d))
        features[:, 0] += np.where(gold == 1, half, -half)
        q = cfg.pseudo_positive_rate
        flip_rate = {
            1: cfg.gamma * (1.0 - q) / cfg.class_prior,
            0: cfg.alpha * q / (1.0 - cfg.class_prior),
        }
        tau = cfg.cluster_sep / 4.0 if cfg.cluster_sep > 0 else 1.0
        u = rng.random(n)
        flip = np.zeros(n, dtype=bool)
        for y in (0, 1):
            mask = gold == y
            if not mask.any():
                continue
            logc = _calibrate_log_scale(np.abs(features[mask, 0]), tau, flip_rate[y])
            if logc == -np.inf:
                continue
            p_flip = np.exp(np.minimum(0.0, logc - np.abs(features[mask, 0]) / tau))
            flip[mask] = u[mask] < p_flip
        yhat = np.where(flip, 1 - gold, gold)
    else:
        q = cfg.pseudo_positive_rate
        yhat = (rng.random(n) < q).astype(np.int64)
        u = rng.random(n)
        gold = np.where(yhat == 1, (u < 1.0 - cfg.alpha), (u < cfg.gamma)).astype(np.int64)
        features = rng.standard_normal((n, d))
        features[:, 0] += np.where(gold == 1, half, -half)
    pseudo = np.where(covered, yhat, ABSTAIN)
    sample = TwoViewSample(
        features=features, pseudo=pseudo.astype(np.int64), gold=gold, config=cfg
    )
    _sanity_check_rates(sample)
    return sample


def noise_params(pseudo, gold):
    """Empirical (alpha_hat, gamma_hat) over the covered examples."""
    pseudo = np.asarray(pseudo, dtype=np.int64).reshape(-1)
    gold = np.asarray(gold, dtype=np.int64).reshape(-1)
    if pseudo.size != gold.size:
        raise ParameterError("pseudo and gold must align")
    cov = pseudo != ABSTAIN
    pos = cov & (pseudo == 1)
    neg = cov & (pseudo == 0)
    if not pos.any() or not neg.any():
        raise DegenerateError(
            "both pseudolabel classes must be present to estimate noise rates"
        )
    alpha_hat = float((gold[pos] == 0).mean())
    gamma_hat = float((gold[neg] == 1).mean())
    return alpha_hat, gamma_hat


def lemma_rhs(err_on_pseudo, alpha, gamma):
    """Balanced error on gold implied by the balanced error on pseudolabels."""
    if alpha < 0 or gamma < 0 or alpha + gamma >= 1.0:
        raise ParameterError(
            f"need alpha, gamma >= 0 with alpha + gamma < 1, got {alpha}, {gamma}"
        )
    return (err_on_pseudo - 0.5 * (alpha + gamma)) / (1.0 - alpha - gamma)


def verify_lemma(cfg, classifier, seed):
    """Measure a fixed classifier's balanced error on gold vs. the prediction.

    Draws a fresh sample, computes the classifier's balanced error against
    gold and against the pseudolabels over the covered set, and reports the
    gap between the measured gold error and lemma_rhs of the pseudo error at
    the empirical noise rates.
    """
    if cfg.boundary_noise:
        raise ParameterError(
            "verify_lemma requires the independence regime (boundary_noise=False)"
        )
    sample = generate(cfg, seed)
    cov = sample.covered()
    if cov.size == 0:
        raise DegenerateError("no covered examples in the drawn sample")
    x = sample.features[cov]
    preds = classifier.predict(x)
    measured = _balanced_error_binary(preds, sample.gold[cov])
    on_pseudo = _balanced_error_binary(preds, sample.pseudo[cov])
    alpha_hat, gamma_hat = noise_params(sample.pseudo, sample.gold)
    predicted = lemma_rhs(on_pseudo, alpha_hat, gamma_hat)
    return {
        "alpha_hat": alpha_hat,
        "gamma_hat": gamma_hat,
        "gap": abs(measured - predicted),
        "measured": measured,
        "on_pseudo": on_pseudo,
        "predicted": predicted,
    }


def _balanced_error_binary(preds, labels):
    errs = []
    for y in (0, 1):
        mask = labels == y
        if mask.any():
            errs.append(float((preds[mask] != y).mean()))
    return float(np.mean(errs))


def tradeoff_curve(settings, n, seed=0, n_seeds=10, n_test=10000, view1_dim=2,
                   cluster_sep=2.0, class_prior=0.5, train_cfg=None):
    """Coverage-vs-noise tradeoff: mean test balanced error per setting.

    settings is a list of (coverage, alpha, gamma) triples. For each triple
    and each of n_seeds repetitions, a training sample of size n is drawn,
    a logistic model is fit on the covered pseudolabels, and its balanced
    error is measured against gold on a fresh test sample. bound_driver is
    (1 - alpha - gamma)^-1 / sqrt(n * coverage * min(q, 1-q)).
    """
    if n_seeds < 1:
        raise ParameterError(f"n_seeds must be >= 1, got {n_seeds}")
    rows = []
    for s_idx, (coverage, alpha, gamma) in enumerate(settings):
        if not 0.0 < coverage <= 1.0:
            raise ParameterError(f"coverage must be in (0, 1], got {coverage}")
        cfg = TwoViewConfig(
            n=n,
            alpha=alpha,
            gamma=gamma,
            abstain_rate=1.0 - coverage,
            class_prior=class_prior,
            view1_dim=view1_dim,
            cluster_sep=cluster_sep,
        )
        test_cfg = TwoViewConfig(
            n=n_test,
            alpha=alpha,
            gamma=gamma,
            class_prior=class_prior,
            view1_dim=view1_dim,
            cluster_sep=cluster_sep,
        )
        errs = []
        for rep in range(n_seeds):
            draw_seed = seed + 100_000 * s_idx + 2 * rep
            sample = generate(cfg, draw_seed)
            cov = sample.covered()
            if cov.size == 0:
                raise DegenerateError("no covered examples; coverage too low for n")
            model = fit_logistic(
                sample.features[cov], sample.pseudo[cov], 2, train_cfg
            )
            test_sample = generate(test_cfg, draw_seed + 1)
            report = evaluate(model, test_sample.features, test_sample.gold)
            errs.append(report.balanced_error)
        errs = np.array(errs)
        q = cfg.pseudo_positive_rate
        driver = (1.0 / (1.0 - alpha - gamma)) / np.sqrt(
            n * coverage * min(q, 1.0 - q)
        )
        rows.append(
            {
                "coverage": float(coverage),
                "alpha": float(alpha),
                "gamma": float(gamma),
                "mean_test_bal_err": float(errs.mean()),
                "std": float(errs.std()),
                "bound_driver": float(driver),
            }
        )
    return rows
