import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierfl import models

from conftest import finite_diff_gradient


@pytest.fixture(scope="module")
def mlp_spec(small_dataset):
    return models.ModelSpec(
        kind="mlp",
        input_dim=small_dataset.dim,
        num_classes=small_dataset.num_classes,
        hidden_dim=6,
    )


class TestModelSpec:
    def test_param_dim_logistic(self, logistic_spec):
        # 4 classes * (5 features + bias)
        assert logistic_spec.param_dim == 24

    def test_param_dim_mlp(self, mlp_spec):
        # 6*(5+1) hidden layer + 4*(6+1) output layer
        assert mlp_spec.param_dim == 64

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            models.ModelSpec(kind="svm", input_dim=2, num_classes=2)

    def test_mlp_needs_hidden(self):
        with pytest.raises(ValueError):
            models.ModelSpec(kind="mlp", input_dim=2, num_classes=2)

    def test_rejects_negative_ridge(self):
        with pytest.raises(ValueError):
            models.ModelSpec(kind="logistic_regression", input_dim=2,
                             num_classes=2, l2_reg=-0.1)


class TestLoss:
    def test_zero_weights_give_log_classes(self, logistic_spec, small_dataset):
        # uniform predictive distribution at w=0
        val = models.loss(logistic_spec, np.zeros(logistic_spec.param_dim),
                          small_dataset.features, small_dataset.labels)
        assert val == pytest.approx(math.log(4), rel=1e-12)

    def test_ridge_term(self, small_dataset):
        spec = models.ModelSpec(kind="logistic_regression", input_dim=5,
                                num_classes=4, l2_reg=2.0)
        w = np.full(spec.param_dim, 0.5)
        base_spec = models.ModelSpec(kind="logistic_regression", input_dim=5,
                                     num_classes=4)
        base = models.loss(base_spec, w, small_dataset.features, small_dataset.labels)
        val = models.loss(spec, w, small_dataset.features, small_dataset.labels)
        assert val == pytest.approx(base + 0.5 * 2.0 * float(w @ w), rel=1e-12)

    def test_rejects_wrong_dim(self, logistic_spec, small_dataset):
        with pytest.raises(ValueError, match="dim"):
            models.loss(logistic_spec, np.zeros(3),
                        small_dataset.features, small_dataset.labels)

    def test_rejects_empty_batch(self, logistic_spec):
        with pytest.raises(ValueError, match="empty"):
            models.loss(logistic_spec, np.zeros(24),
                        np.zeros((0, 5)), np.zeros(0, dtype=np.int64))

    def test_large_logits_stable(self, logistic_spec, small_dataset):
        w = np.full(logistic_spec.param_dim, 500.0)
        val = models.loss(logistic_spec, w, small_dataset.features,
                          small_dataset.labels)
        assert math.isfinite(val)

    @settings(max_examples=25, deadline=None)
    @given(t=st.floats(min_value=0.0, max_value=1.0),
           seed=st.integers(min_value=0, max_value=10))
    def test_convexity_midpoint_logistic(self, t, seed, logistic_spec, small_dataset):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(logistic_spec.param_dim)
        b = rng.standard_normal(logistic_spec.param_dim)
        X, y = small_dataset.features, small_dataset.labels
        lhs = models.loss(logistic_spec, t * a + (1 - t) * b, X, y)
        rhs = t * models.loss(logistic_spec, a, X, y) + (1 - t) * models.loss(
            logistic_spec, b, X, y)
        assert lhs <= rhs + 1e-9


class TestGradient:
    @pytest.mark.parametrize("which", ["logistic", "mlp"])
    def test_matches_finite_differences(self, which, logistic_spec, mlp_spec,
                                        small_dataset):
        spec = logistic_spec if which == "logistic" else mlp_spec
        rng = np.random.default_rng(21)
        X, y = small_dataset.features[:50], small_dataset.labels[:50]
        for _ in range(3):
            w = 0.5 * rng.standard_normal(spec.param_dim)
            g = models.gradient(spec, w, X, y)
            g_fd = finite_diff_gradient(lambda v: models.loss(spec, v, X, y), w)
            assert np.allclose(g, g_fd, rtol=1e-6, atol=1e-8)

    def test_ridge_gradient(self, small_dataset):
        spec = models.ModelSpec(kind="logistic_regression", input_dim=5,
                                num_classes=4, l2_reg=0.3)
        rng = np.random.default_rng(4)
        w = rng.standard_normal(spec.param_dim)
        X, y = small_dataset.features[:40], small_dataset.labels[:40]
        g = models.gradient(spec, w, X, y)
        g_fd = finite_diff_gradient(lambda v: models.loss(spec, v, X, y), w)
        assert np.allclose(g, g_fd, rtol=1e-6, atol=1e-8)

    def test_batch_mean_structure(self, logistic_spec, small_dataset):
        # gradient over a batch equals the mean of per-sample gradients
        X, y = small_dataset.features[:8], small_dataset.labels[:8]
        w = np.linspace(-0.5, 0.5, logistic_spec.param_dim)
        full = models.gradient(logistic_spec, w, X, y)
        per = np.mean([
            models.gradient(logistic_spec, w, X[i:i + 1], y[i:i + 1])
            for i in range(8)
        ], axis=0)
        assert np.allclose(full, per, rtol=1e-12, atol=1e-15)


class TestPredict:
    def test_accuracy_improves_with_training(self, logistic_spec, small_dataset,
                                             small_test_set):
        X, y = small_dataset.features, small_dataset.labels
        w = models.init_weights(logistic_spec, seed=0)
        for _ in range(200):
            w = w - 0.5 * models.gradient(logistic_spec, w, X, y)
        preds = models.predict(logistic_spec, w, small_test_set.features)
        acc = float(np.mean(preds == small_test_set.labels))
        assert acc > 0.9  # well-separated clusters are nearly solvable

    def test_tie_breaks_low_index(self, logistic_spec, small_dataset):
        preds = models.predict(logistic_spec, np.zeros(logistic_spec.param_dim),
                               small_dataset.features[:3])
        assert np.array_equal(preds, [0, 0, 0])


class TestInitWeights:
    def test_logistic_zero(self, logistic_spec):
        assert np.array_equal(models.init_weights(logistic_spec, seed=3),
                              np.zeros(24))

    def test_mlp_seeded(self, mlp_spec):
        a = models.init_weights(mlp_spec, seed=3)
        b = models.init_weights(mlp_spec, seed=3)
        c = models.init_weights(mlp_spec, seed=4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert np.std(a) == pytest.approx(0.01, rel=0.5)


class TestSmoothness:
    def test_quadratic_known_constants(self):
        # f(w) = (a/2)||w||^2 has gradient Lipschitz constant exactly a
        a = 3.0
        est = models.estimate_smoothness_fn(
            lambda w: 0.5 * a * float(w @ w),
            lambda w: a * w,
            dim=4, probes=12, seed=9,
        )
        assert est.beta == pytest.approx(a, rel=1e-12)

    def test_linear_known_slope(self):
        # f(w) = c.w has rho = ||c|| along the direction of c; the probe
        # maximum is a lower bound that approaches ||c|| from below
        c = np.array([3.0, 4.0])
        est = models.estimate_smoothness_fn(
            lambda w: float(c @ w), lambda w: c.copy(),
            dim=2, probes=40, seed=9,
        )
        assert est.rho <= 5.0 + 1e-12
        assert est.rho > 2.0
        assert est.beta == 0.0

    def test_prefix_stability(self, logistic_spec, small_dataset):
        small = models.estimate_smoothness(logistic_spec, small_dataset, 5, seed=2)
        big = models.estimate_smoothness(logistic_spec, small_dataset, 12, seed=2)
        assert big.rho >= small.rho
        assert big.beta >= small.beta

    def test_deterministic(self, logistic_spec, small_dataset):
        a = models.estimate_smoothness(logistic_spec, small_dataset, 8, seed=2)
        b = models.estimate_smoothness(logistic_spec, small_dataset, 8, seed=2)
        assert a == b

    def test_below_analytic_bound(self, logistic_spec, small_dataset):
        est = models.estimate_smoothness(logistic_spec, small_dataset, 16, seed=2)
        cap = models.softmax_beta_upper_bound(logistic_spec, small_dataset.features)
        assert 0.0 < est.beta <= cap

    def test_needs_two_probes(self):
        with pytest.raises(ValueError):
            models.estimate_smoothness_fn(lambda w: 0.0, lambda w: w, 2, 1, 0)
