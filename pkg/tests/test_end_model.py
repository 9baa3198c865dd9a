import numpy as np
import pytest

from cutselect import (
    Dataset,
    EmbeddingMatrix,
    EvalReport,
    LabelMatrix,
    LinearModel,
    ParameterError,
    PseudoLabeling,
    SelectorConfig,
    TrainConfig,
    beta_sweep,
    evaluate,
    fit_logistic,
    select_top_beta,
    train,
)
from cutselect.end_model import DEFAULT_BETAS, _loss_and_grad


def numeric_gradient(w, b, x, y, l2, eps=1e-6):
    """Central finite differences of the training loss in every coordinate."""
    gw = np.zeros_like(w)
    gb = np.zeros_like(b)
    for idx in np.ndindex(w.shape):
        wp, wm = w.copy(), w.copy()
        wp[idx] += eps
        wm[idx] -= eps
        lp = _loss_and_grad(wp, b, x, y, l2)[0]
        lm = _loss_and_grad(wm, b, x, y, l2)[0]
        gw[idx] = (lp - lm) / (2 * eps)
    for i in range(b.size):
        bp, bm = b.copy(), b.copy()
        bp[i] += eps
        bm[i] -= eps
        gb[i] = (_loss_and_grad(w, bp, x, y, l2)[0] - _loss_and_grad(w, bm, x, y, l2)[0]) / (2 * eps)
    return gw, gb


class TestLossAndGrad:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        w = rng.standard_normal((3, 4)) * 0.5
        b = rng.standard_normal(3) * 0.5
        x = rng.standard_normal((12, 4))
        y = rng.integers(0, 3, size=12)
        _, gw, gb = _loss_and_grad(w, b, x, y, l2=0.1)
        ngw, ngb = numeric_gradient(w, b, x, y, l2=0.1)
        np.testing.assert_allclose(gw, ngw, atol=1e-7)
        np.testing.assert_allclose(gb, ngb, atol=1e-7)

    def test_uniform_loss_at_zero_parameters(self):
        x = np.random.default_rng(1).standard_normal((8, 2))
        loss, _, _ = _loss_and_grad(np.zeros((4, 2)), np.zeros(4), x, np.zeros(8, dtype=int), 0.0)
        np.testing.assert_allclose(loss, np.log(4.0), atol=1e-12)


def two_clusters(rng, n, sep=4.0, d=2):
    gold = rng.integers(0, 2, size=n)
    x = rng.standard_normal((n, d))
    x[:, 0] += np.where(gold == 1, sep / 2, -sep / 2)
    return x, gold


class TestFitLogistic:
    def test_separable_clusters(self):
        rng = np.random.default_rng(5)
        x, y = two_clusters(rng, 300, sep=8.0)
        model = fit_logistic(x, y, 2)
        assert (model.predict(x) == y).mean() >= 0.99

    def test_zero_learning_rate_keeps_zero_parameters(self):
        rng = np.random.default_rng(6)
        x, y = two_clusters(rng, 50)
        model = fit_logistic(x, y, 2, TrainConfig(lr=0.0, epochs=3))
        np.testing.assert_array_equal(model.weights, np.zeros((2, 2)))
        np.testing.assert_array_equal(model.bias, np.zeros(2))
        np.testing.assert_allclose(model.loss_history, np.log(2.0), atol=1e-12)

    def test_full_batch_small_lr_loss_non_increasing(self):
        rng = np.random.default_rng(7)
        x, y = two_clusters(rng, 120)
        model = fit_logistic(x, y, 2, TrainConfig(lr=1e-3, epochs=40, batch=1000))
        assert (np.diff(model.loss_history) <= 1e-12).all()

    def test_loss_history_length(self):
        rng = np.random.default_rng(8)
        x, y = two_clusters(rng, 40)
        model = fit_logistic(x, y, 2, TrainConfig(epochs=17))
        assert model.loss_history.size == 17

    def test_same_seed_bitwise_identical(self):
        rng = np.random.default_rng(9)
        x, y = two_clusters(rng, 90)
        a = fit_logistic(x, y, 2, TrainConfig(seed=3))
        b = fit_logistic(x.copy(), y.copy(), 2, TrainConfig(seed=3))
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.bias, b.bias)
        np.testing.assert_array_equal(a.loss_history, b.loss_history)

    def test_standardization_folds_into_raw_space(self):
        rng = np.random.default_rng(10)
        x, y = two_clusters(rng, 150)
        scale = np.array([100.0, 0.01])
        shift = np.array([-40.0, 7.0])
        a = fit_logistic(x, y, 2)
        b = fit_logistic(x * scale + shift, y, 2)
        np.testing.assert_allclose(a.loss_history, b.loss_history, atol=1e-9)
        xt = rng.standard_normal((60, 2)) * 3
        np.testing.assert_array_equal(a.predict(xt), b.predict(xt * scale + shift))

    def test_constant_feature_does_not_blow_up(self):
        rng = np.random.default_rng(11)
        x, y = two_clusters(rng, 60)
        x[:, 1] = 2.5
        model = fit_logistic(x, y, 2)
        assert np.isfinite(model.weights).all()

    def test_misaligned_targets(self):
        with pytest.raises(ParameterError, match="align"):
            fit_logistic(np.zeros((5, 2)), np.zeros(4, dtype=int), 2)

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            TrainConfig(lr=-1.0)
        with pytest.raises(ParameterError):
            TrainConfig(epochs=0)


class TestEvaluate:
    def _threshold_model(self):
        # predicts class 1 exactly when the single feature is positive
        return LinearModel(weights=np.array([[0.0], [1.0]]), bias=np.zeros(2))

    def test_hand_counted_report(self):
        model = self._threshold_model()
        x = np.array([[-1.0]] * 8 + [[1.0]] * 2 + [[1.0]] * 6 + [[-1.0]] * 4)
        gold = np.array([0] * 10 + [1] * 10)
        rep = evaluate(model, x, gold)
        assert rep.accuracy == 0.7
        np.testing.assert_allclose(rep.per_class_error, [0.2, 0.4])
        np.testing.assert_allclose(rep.balanced_error, 0.3)
        assert rep.n_eval == 20

    def test_perfect_predictions(self):
        model = self._threshold_model()
        x = np.array([[-1.0], [2.0]])
        rep = evaluate(model, x, np.array([0, 1]))
        assert rep.accuracy == 1.0 and rep.balanced_error == 0.0

    def test_absent_class_gets_nan_error(self):
        model = self._threshold_model()
        x = np.array([[-1.0], [-2.0]])
        rep = evaluate(model, x, np.array([0, 0]))
        assert np.isnan(rep.per_class_error[1])
        assert rep.balanced_error == 0.0

    def test_balanced_error_equals_error_rate_on_balanced_gold(self):
        rng = np.random.default_rng(14)
        x, gold = two_clusters(rng, 200, sep=1.0)
        gold = np.repeat([0, 1], 100)
        x[:, 0] = np.where(gold == 1, 0.5, -0.5) + rng.standard_normal(200)
        rep = evaluate(self._threshold_model(), x[:, :1], gold)
        np.testing.assert_allclose(rep.balanced_error, 1.0 - rep.accuracy, atol=1e-12)

    def test_empty_split_rejected(self):
        with pytest.raises(ParameterError, match="empty"):
            evaluate(self._threshold_model(), np.zeros((0, 1)), np.zeros(0, dtype=int))

    def test_misalignment_rejected(self):
        with pytest.raises(ParameterError, match="align"):
            evaluate(self._threshold_model(), np.zeros((3, 1)), np.zeros(2, dtype=int))


def onehot_pseudo(hard, num_classes=2):
    soft = np.eye(num_classes)[hard]
    return PseudoLabeling(hard=np.asarray(hard), num_classes=num_classes, soft=soft)


class TestTrainOnSelection:
    def test_trains_on_subset_only(self):
        rng = np.random.default_rng(15)
        x, gold = two_clusters(rng, 80, sep=6.0)
        # poison the labels of the examples that selection must exclude
        labels = gold.copy()
        labels[40:] = 1 - labels[40:]
        scores = np.concatenate([np.zeros(40), np.ones(40)])
        sel = select_top_beta(scores, beta=0.5)
        model = train(x, sel, onehot_pseudo(labels), TrainConfig(epochs=60))
        assert (model.predict(x) == gold).mean() > 0.95

    def test_empty_selection_rejected(self):
        sel = select_top_beta(np.zeros(3), beta=0.1)
        assert sel.selected.size == 0
        with pytest.raises(ParameterError, match="empty"):
            train(np.zeros((3, 2)), sel, onehot_pseudo([0, 1, 0]))

    def test_abstaining_selection_rejected(self):
        sel = select_top_beta(np.zeros(3), beta=1.0)
        p = PseudoLabeling(hard=np.array([0, -1, 1]), num_classes=2)
        with pytest.raises(ParameterError, match="hard labels"):
            train(np.zeros((3, 2)), sel, p)

    def test_single_class_selection_warns(self):
        sel = select_top_beta(np.zeros(4), beta=1.0)
        with pytest.warns(UserWarning, match="single class"):
            train(np.random.default_rng(16).standard_normal((4, 2)), sel, onehot_pseudo([1, 1, 1, 1]))


class TestBetaSweep:
    def _dataset(self, rng, n=80):
        x, gold = two_clusters(rng, n)
        hard = gold.copy()
        flip = rng.random(n) < 0.1
        hard[flip] = 1 - hard[flip]
        labels = LabelMatrix(hard.reshape(-1, 1), num_classes=2)
        ds = Dataset(labels=labels, embeddings=EmbeddingMatrix(x), gold=gold)
        return ds, onehot_pseudo(hard)

    def test_default_grid_shape(self):
        assert DEFAULT_BETAS == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

    def test_sweep_rows(self):
        rng = np.random.default_rng(18)
        ds, p = self._dataset(rng)
        val = two_clusters(rng, 60)
        test = two_clusters(rng, 60)
        out = beta_sweep(
            ds, p, SelectorConfig(method="cut", k=5),
            betas=[0.5, 1.0], train_cfg=TrainConfig(epochs=30),
            val=val, test=test,
        )
        assert len(out.rows) == 2
        r0, r1 = out.rows
        assert r0["beta"] == 0.5 and r0["n_selected"] == 40
        assert r1["beta"] == 1.0 and r1["n_selected"] == 80
        for row in out.rows:
            assert set(row) == {
                "beta", "n_selected", "subset_label_accuracy",
                "val_accuracy", "test_accuracy", "balanced_error",
            }
            assert 0.0 <= row["val_accuracy"] <= 1.0
            assert np.isfinite(row["subset_label_accuracy"])
        assert out.best["val_accuracy"] == max(r["val_accuracy"] for r in out.rows)

    def test_best_index_is_first_maximum(self):
        rng = np.random.default_rng(19)
        ds, p = self._dataset(rng)
        val = two_clusters(rng, 50)
        out = beta_sweep(
            ds, p, SelectorConfig(method="entropy"),
            betas=[1.0, 1.0], train_cfg=TrainConfig(epochs=5), val=val,
        )
        assert out.best_index == 0

    def test_val_required(self):
        rng = np.random.default_rng(20)
        ds, p = self._dataset(rng)
        with pytest.raises(ParameterError, match="validation"):
            beta_sweep(ds, p, SelectorConfig(), betas=[1.0])

    def test_missing_test_split_gives_nan_columns(self):
        rng = np.random.default_rng(21)
        ds, p = self._dataset(rng)
        out = beta_sweep(
            ds, p, SelectorConfig(method="cut", k=5),
            betas=[1.0], train_cfg=TrainConfig(epochs=5), val=two_clusters(rng, 40),
        )
        assert np.isnan(out.rows[0]["test_accuracy"])
        assert np.isnan(out.rows[0]["balanced_error"])

    def test_stratified_config_requires_prior(self):
        with pytest.raises(ParameterError, match="prior"):
            SelectorConfig(stratified=True)


def test_eval_report_is_frozen():
    rep = EvalReport(accuracy=1.0, balanced_error=0.0, per_class_error=np.zeros(2), n_eval=5)
    with pytest.raises(ValueError):
        rep.per_class_error[0] = 1.0
