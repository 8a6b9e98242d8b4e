"""
Tests for the regression families and their shared contract.
"""

import json

import numpy as np
import pytest
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
from scipy.optimize import minimize

from inference.exceptions import (
    BundleFormatError,
    DegenerateData,
    DegenerateResponse,
    DimensionMismatch,
    IllConditionedKernel,
    TooFewSamples,
    UnsupportedFamily,
)
from inference.regression import fit_model, model_from_dict
from inference.regression.base import STD_FLOOR, Standardizer, check_training_data
from inference.regression.glm import coordinate_descent, fit_glm, objective
from inference.regression.gpr import (
    ard_relevance,
    factorize,
    fit_gpr,
    initial_theta,
    log_marginal_likelihood,
    matern32,
    optimize_hyperparameters,
    theta_bounds,
)
from inference.regression.nca import fit_nca, nca_loss, neighbor_probabilities, weighted_l1
from inference.regression.rf import fit_rf
from inference.regression.svr import dual_objective, fit_svr, kernel, smo
from sensing.exceptions import BadConfig

from .fixtures import fast_config


def linear_data(n=60, d=5, noise=0.05, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * np.arange(1, d + 1) + 10.0
    y = 2.0 * X[:, 0] - 0.5 * X[:, 1] + noise * rng.normal(size=n)
    return X, y


def finite_difference(f, x, h=1e-6):
    grad = np.empty_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = h
        grad[k] = (f(x + step) - f(x - step)) / (2 * h)
    return grad


class ContractTest(SimpleTestCase):
    """
    Test cases for standardization, input checks and the predict contract.
    """

    def test_standardizer_floors_constant_columns(self):
        """Test that a constant column gets the floor std and maps to zero."""
        X = np.column_stack([np.arange(5.0), np.full(5, 7.0)])
        scaler = Standardizer.fit(X)

        self.assertEqual(scaler.std[1], STD_FLOOR)
        np.testing.assert_allclose(scaler.transform(X)[:, 1], 0.0)
        np.testing.assert_allclose(scaler.transform(X).mean(axis=0), 0.0, atol=1e-12)

    def test_check_training_data_errors(self):
        """Test that shape, size and finiteness problems map to their errors."""
        with self.assertRaises(DimensionMismatch):
            check_training_data(np.ones((4, 2)), np.ones(3), 2, 'glm')
        with self.assertRaises(TooFewSamples):
            check_training_data(np.ones((4, 2)), np.ones(4), 5, 'gpr')
        with self.assertRaises(DegenerateData):
            check_training_data(np.array([[1.0], [np.inf]]), np.ones(2), 2, 'glm')

    def test_predict_checks_width(self):
        """Test that predicting with the wrong feature count raises DimensionMismatch."""
        model = fit_glm(*linear_data())
        with self.assertRaises(DimensionMismatch):
            model.predict(np.ones((2, 3)))

    def test_single_row_predicts_a_float(self):
        """Test that a 1-D input returns a scalar."""
        X, y = linear_data()
        value = fit_glm(X, y).predict(X[0])
        self.assertIsInstance(value, float)

    def test_svr_has_no_feature_weights(self):
        """Test that the support vector family refuses to rank features."""
        model = fit_svr(*linear_data(n=20))
        with self.assertRaises(UnsupportedFamily):
            model.raw_feature_weights()

    def test_unknown_kind(self):
        """Test that unknown families raise BadConfig at fit and BundleFormatError at load."""
        X, y = linear_data()
        with self.assertRaises(BadConfig):
            fit_model('lasso', X, y, fast_config())
        with self.assertRaises(BundleFormatError):
            model_from_dict({'kind': 'lasso'})

    def test_every_family_survives_json(self):
        """Test that each family predicts identically after a JSON round trip."""
        X, y = linear_data(n=40)
        config = fast_config()
        for kind in ('glm', 'rf', 'svm', 'gpr', 'nca'):
            with self.subTest(kind=kind):
                model = fit_model(kind, X, y, config, stream=('br', 'rest'))
                again = model_from_dict(json.loads(json.dumps(model.to_dict())))
                self.assertEqual(again.kind, kind)
                np.testing.assert_allclose(again.predict(X[:5]), model.predict(X[:5]), rtol=0, atol=1e-12)


class GlmTest(SimpleTestCase):
    """
    Test cases for the elastic-net coordinate descent.
    """

    def test_matches_smooth_reformulation(self):
        """Test that the solution is no worse than L-BFGS-B on the split-sign problem."""
        X, y = linear_data(n=40, noise=0.5, seed=1)
        model = fit_glm(X, y, alpha=0.5)
        Z = model.standardizer.transform(X)
        d = Z.shape[1]
        lam, alpha = model.lam, model.alpha

        def split_objective(v):
            beta = v[:d] - v[d:]
            residual = y - y.mean() - Z @ beta
            value = residual @ residual / y.size + 0.5 * lam * (1 - alpha) * beta @ beta + lam * alpha * v.sum()
            grad_beta = -2.0 * Z.T @ residual / y.size + lam * (1 - alpha) * beta
            return value, np.concatenate([grad_beta + lam * alpha, -grad_beta + lam * alpha])

        oracle = minimize(split_objective, np.zeros(2 * d), jac=True, method='L-BFGS-B',
                          bounds=[(0, None)] * (2 * d), options={'ftol': 1e-15, 'gtol': 1e-12})
        self.assertLessEqual(model.objective(X, y), oracle.fun + 1e-8)

    def test_random_perturbations_do_not_improve(self):
        """Test that small perturbations of the fitted coefficients never lower the objective."""
        X, y = linear_data(n=30, noise=1.0, seed=2)
        model = fit_glm(X, y)
        Z = model.standardizer.transform(X)
        best = objective(Z, y, model.intercept, model.beta, model.lam, model.alpha)
        rng = np.random.default_rng(0)
        for _ in range(2000):
            beta = model.beta + rng.normal(scale=1e-3, size=model.beta.size)
            self.assertGreaterEqual(objective(Z, y, model.intercept, beta, model.lam, model.alpha), best - 1e-12)

    def test_large_penalty_zeroes_slopes(self):
        """Test that a huge lambda leaves only the intercept."""
        X, y = linear_data()
        model = fit_glm(X, y, lam=1e6)
        np.testing.assert_array_equal(model.beta, 0.0)
        self.assertAlmostEqual(model.intercept, y.mean())

    def test_tiny_penalty_recovers_raw_slopes(self):
        """Test that with negligible penalty the raw-unit slopes match the generator."""
        X, y = linear_data(noise=0.0)
        slopes = fit_glm(X, y, lam=1e-10).raw_coefficients()
        np.testing.assert_allclose(slopes[:2], [2.0, -0.5], atol=1e-4)
        np.testing.assert_allclose(slopes[2:], 0.0, atol=1e-4)

    def test_feature_weights_follow_signal(self):
        """Test that the driving features carry the largest weights."""
        X, y = linear_data()
        weights = fit_glm(X, y).raw_feature_weights()
        self.assertEqual(set(np.argsort(weights)[-2:]), {0, 1})


class SvrTest(SimpleTestCase):
    """
    Test cases for SMO on the epsilon-insensitive dual.
    """

    def test_three_point_dual_matches_grid(self):
        """Test that SMO reaches the minimum of the dual over a fine feasible grid."""
        rng = np.random.default_rng(3)
        Z = rng.normal(size=(3, 2))
        y = rng.normal(size=3)
        K = kernel(Z, Z)
        eps, C = 0.1, 1.0
        alpha, alpha_star, _, gap, _ = smo(K, y, eps, C)
        value = dual_objective(K, y, alpha - alpha_star, (alpha + alpha_star).sum(), eps)

        grid = np.linspace(-C, C, 401)
        c1, c2 = np.meshgrid(grid, grid)
        c = np.stack([c1.ravel(), c2.ravel(), -(c1 + c2).ravel()], axis=1)
        c = c[np.abs(c[:, 2]) <= C]
        grid_values = 0.5 * np.einsum('ki,ij,kj->k', c, K, c) + eps * np.abs(c).sum(axis=1) - c @ y

        self.assertLessEqual(gap, 1e-6)
        self.assertLessEqual(value, grid_values.min() + 1e-6)
        self.assertAlmostEqual((alpha - alpha_star).sum(), 0.0, places=10)
        self.assertTrue(np.all((alpha >= 0) & (alpha <= C) & (alpha_star >= 0) & (alpha_star <= C)))

    def test_fits_smooth_curve(self):
        """Test that a sine curve is reproduced within a few tube widths."""
        x = np.linspace(0, 3, 50)[:, None]
        y = np.sin(2 * x[:, 0])
        model = fit_svr(x, y)
        self.assertLess(np.mean(np.abs(model.predict(x) - y)), 5 * model.epsilon + 0.05)

    def test_defaults_tie_box_to_tube(self):
        """Test that C defaults to ten times the tube half-width."""
        model = fit_svr(*linear_data(n=30))
        self.assertAlmostEqual(model.C, 10.0 * model.epsilon)


class RandomForestTest(SimpleTestCase):
    """
    Test cases for the bagged trees and OOB importance.
    """

    def fit(self, X, y, seed=0):
        return fit_rf(X, y, rng=np.random.default_rng(seed), oob_rng=np.random.default_rng(seed + 100),
                      n_trees=25, min_leaf=5)

    def test_importance_finds_driver(self):
        """Test that permuting the driving predictor hurts the most."""
        X, y = linear_data(n=120, noise=0.1, seed=4)
        model = self.fit(X, y)
        self.assertEqual(int(np.argmax(model.raw_feature_weights())), 0)
        self.assertTrue(np.all(model.raw_feature_weights() >= 0))

    def test_out_of_bag_rows_are_outside_the_bag(self):
        """Test that every tree keeps some out-of-bag rows and they are valid indices."""
        X, y = linear_data(n=60)
        model = self.fit(X, y)
        self.assertEqual(len(model.oob_indices), 25)
        for oob in model.oob_indices:
            self.assertGreater(oob.size, 0)
            self.assertTrue(np.all((oob >= 0) & (oob < 60)))

    def test_prediction_is_mean_of_trees(self):
        """Test that the forest predicts the mean of its trees."""
        X, y = linear_data(n=60)
        model = self.fit(X, y)
        Z = model.standardizer.transform(X[:4])
        np.testing.assert_allclose(model.predict(X[:4]), model.tree_predictions(Z).mean(axis=0))

    def test_same_streams_same_forest(self):
        """Test that equal seeds give identical forests."""
        X, y = linear_data(n=60)
        np.testing.assert_array_equal(self.fit(X, y).predict(X), self.fit(X, y).predict(X))

    def test_needs_twenty_rows_by_default(self):
        """Test that the forest refuses tiny training sets."""
        X, y = linear_data(n=10)
        with self.assertRaises(TooFewSamples):
            fit_rf(X, y, np.random.default_rng(0), np.random.default_rng(1))


class GprTest(SimpleTestCase):
    """
    Test cases for the ARD Matern Gaussian process.
    """

    def setUp(self):
        rng = np.random.default_rng(5)
        self.Z = rng.normal(size=(15, 2))
        self.y = np.sin(2 * self.Z[:, 0]) + 0.1 * rng.normal(size=15)

    def test_gradient_matches_finite_differences(self):
        """Test that the analytic likelihood gradient agrees with central differences."""
        theta = np.array([0.2, 0.3, -0.4, np.log(0.05)])
        _, grad = log_marginal_likelihood(theta, self.Z, self.y)
        numeric = finite_difference(lambda t: log_marginal_likelihood(t, self.Z, self.y, gradient=False), theta)
        np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-6)

    def test_optimizer_never_loses_likelihood(self):
        """Test that the likelihood at accepted iterates is non-decreasing."""
        trace = []
        theta0 = initial_theta(self.Z, self.y)
        optimize_hyperparameters(self.Z, self.y, theta0, theta_bounds(self.Z, self.y), max_iter=50, trace=trace)
        self.assertGreater(len(trace), 1)
        self.assertTrue(all(b >= a - 1e-8 for a, b in zip(trace, trace[1:])))

    def test_relevance_prefers_the_active_input(self):
        """Test that the input the response depends on gets the shorter length scale."""
        rng = np.random.default_rng(6)
        X = rng.normal(size=(40, 2))
        y = np.sin(2 * X[:, 0]) + 0.05 * rng.normal(size=40)
        model = fit_gpr(X, y, np.random.default_rng(0), restarts=2, max_iter=100)
        relevance = model.raw_feature_weights()

        self.assertAlmostEqual(relevance.max(), 1.0)
        self.assertGreater(relevance[0], relevance[1])

    def test_ard_relevance_is_one_at_shortest_scale(self):
        """Test the exponential relevance transform of log squared length scales."""
        np.testing.assert_allclose(ard_relevance([0.0, 1.0, np.log(4.0)]), [1.0, np.exp(-1.0), 0.25])

    def test_constant_response_is_rejected(self):
        """Test that a flat response raises DegenerateResponse."""
        with self.assertRaises(DegenerateResponse):
            fit_gpr(self.Z, np.ones(15), np.random.default_rng(0))

    def test_jitter_rescues_singular_kernel(self):
        """Test that a rank-one matrix factors after adding jitter."""
        _, jitter = factorize(np.ones((3, 3)), 1.0)
        self.assertGreater(jitter, 0.0)

    def test_indefinite_kernel_is_reported(self):
        """Test that a negative definite matrix raises IllConditionedKernel."""
        with self.assertRaises(IllConditionedKernel):
            factorize(-np.eye(3), 1.0)

    def test_uncertainty_grows_away_from_data(self):
        """Test that the posterior std is smaller at a training input than far from all inputs."""
        model = fit_gpr(self.Z, self.y, np.random.default_rng(0), restarts=1, max_iter=50)
        X_train = self.Z * model.standardizer.std + model.standardizer.mean
        near, far = model.predict_std(np.vstack([X_train[0], X_train[0] + 50.0]))
        self.assertLess(near, far)

    def test_kernel_matches_pairwise_formula(self):
        """Test the Matern kernel against a loop over row pairs."""
        log_scales = np.array([0.3, -0.7])
        Zb = self.Z[:4] + 0.5
        K = matern32(self.Z, Zb, 0.2, log_scales)
        for i in range(self.Z.shape[0]):
            for j in range(Zb.shape[0]):
                s = np.sqrt(3.0 * np.sum((self.Z[i] - Zb[j]) ** 2 / np.exp(log_scales)))
                self.assertAlmostEqual(K[i, j], np.exp(0.2) * (1.0 + s) * np.exp(-s), places=12)

    def test_gradient_on_wider_inputs(self):
        """Test the likelihood gradient with eight samples of three features."""
        rng = np.random.default_rng(9)
        Z = rng.normal(size=(8, 3))
        y = Z[:, 0] - 0.5 * Z[:, 2] + 0.1 * rng.normal(size=8)
        theta = np.array([0.1, 0.4, -0.2, 0.9, np.log(0.05)])
        _, grad = log_marginal_likelihood(theta, Z, y)
        numeric = finite_difference(lambda t: log_marginal_likelihood(t, Z, y, gradient=False), theta)
        np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-6)

    def test_fixed_hyperparameters_skip_optimization(self):
        """Test that passing theta conditions the process on exactly those values."""
        theta = np.array([0.0, 0.0, 0.0, np.log(0.1)])
        model = fit_gpr(self.Z, self.y, np.random.default_rng(0), theta=theta)
        np.testing.assert_array_equal(model.theta, theta)
        self.assertAlmostEqual(model.noise_variance, 0.1)


class NcaTest(SimpleTestCase):
    """
    Test cases for neighborhood component analysis.
    """

    def test_gradient_matches_finite_differences(self):
        """Test that the analytic loss gradient agrees with central differences."""
        rng = np.random.default_rng(7)
        Z = rng.normal(size=(12, 3))
        y = Z[:, 0] + 0.1 * rng.normal(size=12)
        w = np.array([0.8, 1.3, 0.4])
        _, grad = nca_loss(w, Z, y, 0.1)
        numeric = finite_difference(lambda v: nca_loss(v, Z, y, 0.1)[0], w)
        np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-8)

    def test_weighted_distance_matches_pairwise_sum(self):
        """Test the squared-weight L1 distance against a loop over row pairs."""
        rng = np.random.default_rng(10)
        Za, Zb = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
        w = np.array([0.5, -1.2, 0.0])
        D = weighted_l1(Za, Zb, w)
        for i in range(5):
            for j in range(4):
                self.assertAlmostEqual(D[i, j], np.sum(w ** 2 * np.abs(Za[i] - Zb[j])), places=12)

    def test_leave_one_out_probabilities(self):
        """Test that training rows never pick themselves and every row sums to one."""
        rng = np.random.default_rng(11)
        Z = rng.normal(size=(6, 2))
        P = neighbor_probabilities(np.ones(2), Z)

        np.testing.assert_array_equal(np.diag(P), np.zeros(6))
        np.testing.assert_allclose(P.sum(axis=1), np.ones(6))
        self.assertTrue(np.all(neighbor_probabilities(np.ones(2), Z, Z).diagonal() > 0))

    def test_weights_pick_the_relevant_feature(self):
        """Test that the feature driving the response ends with the largest squared weight."""
        rng = np.random.default_rng(8)
        X = rng.normal(size=(60, 4))
        y = 3.0 * X[:, 2] + 0.05 * rng.normal(size=60)
        weights = fit_nca(X, y).raw_feature_weights()
        self.assertEqual(int(np.argmax(weights)), 2)

    def test_hard_mode_returns_training_responses(self):
        """Test that hard prediction picks an existing training response."""
        X, y = linear_data(n=20)
        model = fit_nca(X, y, hard=True)
        for value in model.predict(X[:3] + 0.01):
            self.assertIn(value, y)


class TestCoordinateDescentProperties:
    """
    Property tests on the elastic-net solver.
    """

    @hypothesis_settings(max_examples=25, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=10_000),
        alpha=st.floats(min_value=0.0, max_value=1.0),
        lam=st.floats(min_value=1e-3, max_value=10.0),
    )
    def test_objective_never_increases(self, seed, alpha, lam):
        rng = np.random.default_rng(seed)
        Z = rng.normal(size=(25, 4))
        Z -= Z.mean(axis=0)
        y = rng.normal(size=25)
        _, _, trace = coordinate_descent(Z, y, lam, alpha, record=True)

        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


@pytest.mark.slow
class TestGprGradientProperties:
    """
    Gradient checks over random hyperparameters.
    """

    @hypothesis_settings(max_examples=10, deadline=None)
    @given(theta=st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=4, max_size=4))
    def test_gradient_agrees(self, theta):
        rng = np.random.default_rng(0)
        Z = rng.normal(size=(10, 2))
        y = Z[:, 1] + 0.1 * rng.normal(size=10)
        theta = np.asarray(theta)
        theta[-1] = theta[-1] - 2.0
        _, grad = log_marginal_likelihood(theta, Z, y)
        numeric = finite_difference(lambda t: log_marginal_likelihood(t, Z, y, gradient=False), theta)
        np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-5)
