#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   Perform automated testing on the ``gaussfilter`` module.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

"""
# pylint: disable=import-error
# pylint: disable=invalid-name
# pylint: disable=wrong-import-position

import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.realpath(__file__))))
# Set sys.path for relative imports ^^^
import itertools
import numpy as np
from numpy.polynomial.hermite_e import hermegauss
# locals
from base import TestBase
from testlibs import msgs
from adfslam import gaussfilter as gf
from adfslam.errors import (InvalidDimensionError,
                            NonPsdCovarianceError,
                            NumericError,
                            ShapeError,
                            SingularInnovationError)


def _random_cov(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T / d + 0.5 * np.eye(d)


def _gauss_hermite_mean(g, state, deg=7):
    """Tensor-product Gauss-Hermite expectation of ``g`` under ``state``."""
    x, w = hermegauss(deg)
    w = w / np.sqrt(2 * np.pi)
    L = np.linalg.cholesky(state.cov)
    total = 0.0
    for idx in itertools.product(range(deg), repeat=state.dim):
        u = x[list(idx)]
        total = total + np.prod(w[list(idx)]) * np.asarray(g(state.mean + L @ u))
    return total


def _linear_model(rng, d, m):
    A = np.linalg.qr(rng.normal(size=(d, d)))[0] * 0.95
    H = rng.normal(size=(m, d))
    Q, R = _random_cov(rng, d) * 0.1, _random_cov(rng, m) * 0.1
    dyn = gf.FunctionDynamicsModel(f=lambda x, e, k: A @ x + e, Q=Q, state_dim=d, noise_dim=d)
    meas = gf.FunctionMeasurementModel(h=lambda x, k: H @ x, R=R, meas_dim=m)
    return A, H, Q, R, dyn, meas


class TestGaussFilter(TestBase):
    """Testing suite for the ``gaussfilter`` module."""

    _MSG1 = msgs.templates.not_as_expected.general
    _MSG2 = msgs.templates.not_as_expected.tolerance

    @classmethod
    def setUpClass(cls):
        """Run this logic at the start of all test cases."""
        super().setUpClass()
        msgs.startoftest.startoftest(module_name='gaussfilter')

    def test01a__generate_cubature_points(self):
        """Test the ``generate_cubature_points`` function.

        :Test:
            - Verify the rule has 2n points of norm sqrt(n), with equal
              weights summing to one, and unit second moments.

        """
        for n in range(1, 8):
            rule = gf.generate_cubature_points(n)
            self.assertEqual(len(rule), 2 * n, msg=self._MSG1.format(2 * n, len(rule)))
            self.assertEqual(rule.dim, n)
            self.assert_allclose(np.linalg.norm(rule.unit_points, axis=1), np.sqrt(n))
            self.assertAlmostEqual(rule.weights.sum(), 1.0, places=14)
            self.assert_allclose(rule.weights @ rule.unit_points, np.zeros(n), atol=1e-15)
            self.assert_allclose((rule.unit_points.T * rule.weights) @ rule.unit_points,
                                 np.eye(n), atol=1e-14)

    def test01b__generate_cubature_points__invalid(self):
        """Test the ``generate_cubature_points`` function with n = 0.

        :Test:
            - Verify an InvalidDimensionError is raised.

        """
        with self.assertRaises(InvalidDimensionError):
            gf.generate_cubature_points(0)

    def test02a__transform_moments__cubic_exactness(self):
        """Test the ``transform_moments`` function on cubic polynomials.

        :Test:
            - For 200 random polynomials of total degree <= 3 in
              dimensions 1 to 5, verify the mean matches the closed-form
              Gaussian expectation within 1e-9 relative error.

        """
        rng = np.random.default_rng(1)
        worst = 0.0
        for i in range(200):
            d = 1 + i % 5
            m, P = rng.normal(size=d), _random_cov(rng, d)
            c, a, u = rng.normal(), rng.normal(size=d), rng.normal(size=d)
            B = rng.normal(size=(d, d))
            mean, _, _ = gf.transform_moments(lambda x: c + a @ x + x @ B @ x + (u @ x)**3,
                                              gf.GaussianState(m, P))
            mu, s2 = u @ m, u @ P @ u
            exact = c + a @ m + np.trace(B @ P) + m @ B @ m + mu**3 + 3 * mu * s2
            worst = max(worst, abs(mean[0] - exact) / max(1.0, abs(exact)))
        self.assertLess(worst, 1e-9, msg=self._MSG2.format(1e-9, worst))

    def test02b__transform_moments__gauss_hermite_oracle(self):
        """Test the ``transform_moments`` function against Gauss-Hermite.

        :Test:
            - Verify the cubature mean of a 2D cubic agrees with a
              high-order Gauss-Hermite rule.
            - Verify the cubature mean of a quartic does not (the rule is
              third order): E[x^4] = 3 for N(0, 1), the rule gives 1.

        """
        state = gf.GaussianState([0.3, -1.2], [[1.0, 0.3], [0.3, 0.5]])
        g = lambda x: np.array([x[0]**3 - 2 * x[0] * x[1] + x[1]**2 + 1.0])
        mean, _, _ = gf.transform_moments(g, state)
        self.assert_allclose(mean, _gauss_hermite_mean(g, state), atol=1e-10, rtol=1e-10)
        std1 = gf.GaussianState([0.0], [[1.0]])
        q, _, _ = gf.transform_moments(lambda x: x**4, std1)
        gh = _gauss_hermite_mean(lambda x: x**4, std1)
        self.assertAlmostEqual(gh[0], 3.0, places=10)
        self.assertAlmostEqual(q[0], 1.0, places=12)

    def test02c__transform_moments__linear_covariance(self):
        """Test the ``transform_moments`` function on a linear map.

        :Test:
            - Verify the output and cross covariances equal A P A^T and
              P A^T, and the output covariance is exactly symmetric.

        """
        rng = np.random.default_rng(2)
        A = rng.normal(size=(3, 4))
        state = gf.GaussianState(rng.normal(size=4), _random_cov(rng, 4))
        mean, cov, cross = gf.transform_moments(lambda x: A @ x, state)
        self.assert_allclose(mean, A @ state.mean, atol=1e-12)
        self.assert_allclose(cov, A @ state.cov @ A.T, atol=1e-12)
        self.assert_allclose(cross, state.cov @ A.T, atol=1e-12)
        self.assertTrue(np.array_equal(cov, cov.T))

    def test02d__transform_moments__non_finite(self):
        """Test the ``transform_moments`` function with a NaN output.

        :Test:
            - Verify a NumericError is raised, carrying the index of the
              offending sigma point.

        """
        state = gf.GaussianState([0.0], [[1.0]])
        with self.assertRaises(NumericError) as ctx:
            gf.transform_moments(lambda x: np.array([np.nan]) if x[0] < 0 else x, state)
        self.assertEqual(ctx.exception.index, 1, msg=self._MSG1.format(1, ctx.exception.index))

    def test02e__transform_moments__inconsistent_shape(self):
        """Test the ``transform_moments`` function with a ragged output.

        :Test:
            - Verify a ShapeError is raised.

        """
        state = gf.GaussianState([0.0], [[1.0]])
        with self.assertRaises(ShapeError):
            gf.transform_moments(lambda x: np.ones(1) if x[0] > 0 else np.ones(2), state)

    def test03a__cholesky_sqrt__positive_definite(self):
        """Test the ``cholesky_sqrt`` function on a PD matrix.

        :Test:
            - Verify L L^T = P with no jitter applied.

        """
        P = _random_cov(np.random.default_rng(3), 5)
        L, j = gf.cholesky_sqrt(P, return_jitter=True)
        self.assert_allclose(L @ L.T, P, atol=1e-12)
        self.assertEqual(j, 0.0)

    def test03b__cholesky_sqrt__singular_psd(self):
        """Test the ``cholesky_sqrt`` function on a singular PSD matrix.

        :Test:
            - Verify the factorisation succeeds with the smallest
              non-zero jitter level.

        """
        L, j = gf.cholesky_sqrt(np.ones((2, 2)), return_jitter=True)
        self.assertAlmostEqual(j, 1e-12, places=20)
        self.assert_allclose(L @ L.T, np.ones((2, 2)) + j * np.eye(2), atol=1e-12)

    def test03c__cholesky_sqrt__not_psd(self):
        """Test the ``cholesky_sqrt`` function on an indefinite matrix.

        :Test:
            - Verify a NonPsdCovarianceError is raised once the jitter
              schedule is exhausted.

        """
        with self.assertRaises(NonPsdCovarianceError) as ctx:
            gf.cholesky_sqrt(np.diag([1.0, -1.0]))
        self.assertAlmostEqual(ctx.exception.jitter, gf.JITTER_SCHEDULE[-1])

    def test03d__cholesky_sqrt__non_finite(self):
        """Test the ``cholesky_sqrt`` function with a NaN entry.

        :Test:
            - Verify a NumericError is raised.

        """
        with self.assertRaises(NumericError):
            gf.cholesky_sqrt(np.array([[1.0, np.nan], [np.nan, 1.0]]))

    def test04a__finite_difference_jacobian(self):
        """Test the ``finite_difference_jacobian`` function.

        :Test:
            - Verify the Jacobian of a smooth map against its analytic
              form.
            - Verify a NaN evaluation raises a NumericError carrying the
              perturbed coordinate.

        """
        g = lambda x: np.array([np.sin(x[0]) * x[1], x[1]**2, np.exp(x[2])])
        x = np.array([0.3, -1.1, 0.5])
        J = np.array([[np.cos(x[0]) * x[1], np.sin(x[0]), 0.0],
                      [0.0, 2 * x[1], 0.0],
                      [0.0, 0.0, np.exp(x[2])]])
        self.assert_allclose(gf.finite_difference_jacobian(g, x), J, atol=1e-8)
        with self.assertRaises(NumericError) as ctx:
            gf.finite_difference_jacobian(lambda z: np.sqrt(z[1:]), np.array([1.0, 0.0]))
        self.assertEqual(ctx.exception.index, 1)

    def test05a__linear_equivalence(self):
        """Test the EKF, the UKF and the closed-form Kalman filter agree.

        :Test:
            - On 50 random linear-Gaussian models (d <= 6), run 100
              predict/update steps with each filter.
            - Verify the posterior means and covariances agree within
              1e-8.

        """
        rng = np.random.default_rng(4)
        worst = 0.0
        for i in range(50):
            d, m_dim = 1 + i % 6, 1 + i % 3
            A, H, Q, R, dyn, meas = _linear_model(rng, d, m_dim)
            ek = uk = gf.GaussianState(rng.normal(size=d), _random_cov(rng, d))
            m, P = ek.mean, ek.cov
            for k in range(1, 101):
                y = rng.normal(size=m_dim)
                ek, _ = gf.ekf_update(gf.ekf_predict(ek, dyn, k), meas, y, k)
                uk, _ = gf.ukf_update(gf.ukf_predict(uk, dyn, k), meas, y, k)
                m, P = A @ m, A @ P @ A.T + Q
                S = H @ P @ H.T + R
                K = np.linalg.solve(S, H @ P).T
                m, P = m + K @ (y - H @ m), P - K @ S @ K.T
                for est in (ek, uk):
                    worst = max(worst,
                                np.max(np.abs(est.mean - m)) / max(1.0, np.max(np.abs(m))),
                                np.max(np.abs(est.cov - P)) / max(1.0, np.max(np.abs(P))))
        self.assertLess(worst, 1e-8, msg=self._MSG2.format(1e-8, worst))

    def test05b__ukf_predict__no_noise(self):
        """Test the ``ukf_predict`` function with a zero noise dimension.

        :Test:
            - Verify the state is propagated without augmentation.

        """
        dyn = gf.FunctionDynamicsModel(f=lambda x, e, k: 2.0 * x, Q=None, state_dim=2,
                                       noise_dim=0)
        out = gf.ukf_predict(gf.GaussianState([1.0, 2.0], np.eye(2)), dyn, 1)
        self.assert_allclose(out.mean, [2.0, 4.0], atol=1e-12)
        self.assert_allclose(out.cov, 4.0 * np.eye(2), atol=1e-12)

    def test05c__ekf_predict__finite_difference_jacobians(self):
        """Test the ``ekf_predict`` function without analytic Jacobians.

        :Test:
            - Verify the finite-difference prediction matches the
              analytic one for a nonlinear, non-additive model.

        """
        f = lambda x, e, k: np.array([x[0] + np.sin(x[1]) * (1 + e[0]), x[1] * 0.9 + e[0]])
        jx = lambda x, e, k: np.array([[1.0, np.cos(x[1]) * (1 + e[0])], [0.0, 0.9]])
        je = lambda x, e, k: np.array([[np.sin(x[1])], [1.0]])
        state = gf.GaussianState([0.5, 0.7], [[0.2, 0.05], [0.05, 0.1]])
        fd = gf.FunctionDynamicsModel(f=f, Q=[[0.01]], state_dim=2, noise_dim=1)
        an = gf.FunctionDynamicsModel(f=f, Q=[[0.01]], state_dim=2, noise_dim=1,
                                      jac_x=jx, jac_noise=je)
        self.assertFalse(fd.analytic_jacobians)
        self.assertTrue(an.analytic_jacobians)
        a, b = gf.ekf_predict(state, fd, 1), gf.ekf_predict(state, an, 1)
        self.assert_allclose(a.mean, b.mean, atol=1e-14)
        self.assert_allclose(a.cov, b.cov, atol=1e-8)

    def test06a__update__singular_innovation(self):
        """Test the update functions with a singular innovation.

        :Test:
            - Use a constant sensor with zero measurement noise, so
              S = 0, and verify a SingularInnovationError is raised by
              both updates.

        """
        state = gf.GaussianState([1.0, 0.0], np.diag([0.0, 1.0]))
        meas = gf.FunctionMeasurementModel(h=lambda x, k: np.zeros(1), R=[[0.0]], meas_dim=1,
                                           jac=lambda x, k: np.zeros((1, 2)))
        for update in (gf.ekf_update, gf.ukf_update):
            with self.assertRaises(SingularInnovationError):
                update(state, meas, np.array([1.0]), 0)

    def test06b__update__wrong_measurement_length(self):
        """Test the update functions with a wrong-length measurement.

        :Test:
            - Verify an InvalidDimensionError is raised.

        """
        state = gf.GaussianState([1.0, 0.0], np.eye(2))
        meas = gf.FunctionMeasurementModel(h=lambda x, k: x[:1], R=[[1.0]], meas_dim=1)
        for update in (gf.ekf_update, gf.ukf_update):
            with self.assertRaises(InvalidDimensionError):
                update(state, meas, np.array([1.0, 2.0]), 0)

    def test06c__update__contraction(self):
        """Test the update functions never increase the covariance.

        :Test:
            - For a nonlinear sensor, verify P - P+ is PSD and P+ is
              exactly symmetric, for both updates.
            - Verify the innovation statistics have the expected shapes.

        """
        rng = np.random.default_rng(5)
        W = rng.normal(size=(2, 4))
        meas = gf.FunctionMeasurementModel(h=lambda x, k: np.sin(W @ x), R=np.eye(2) * 0.1,
                                           meas_dim=2)
        state = gf.GaussianState(rng.normal(size=4), _random_cov(rng, 4))
        for update in (gf.ekf_update, gf.ukf_update):
            post, stats = update(state, meas, np.array([0.1, -0.2]), 0)
            self.assertTrue(np.array_equal(post.cov, post.cov.T))
            self.assertGreaterEqual(np.linalg.eigvalsh(state.cov - post.cov)[0], -1e-12)
            self.assertLess(np.trace(post.cov), np.trace(state.cov))
            self.assertEqual(stats.innovation_cov.shape, (2, 2))
            self.assertEqual(stats.cross_cov.shape, (4, 2))

    def test07a__gaussian_state__construction(self):
        """Test the ``GaussianState`` class.

        :Test:
            - Verify the covariance is symmetrised.
            - Verify a dimension mismatch raises InvalidDimensionError.
            - Verify ``is_finite`` detects a NaN.

        """
        s = gf.GaussianState([0.0, 1.0], [[1.0, 0.2], [0.4, 1.0]])
        self.assert_allclose(s.cov, [[1.0, 0.3], [0.3, 1.0]])
        self.assertEqual(s.dim, 2)
        self.assertTrue(s.is_finite())
        self.assertFalse(gf.GaussianState([np.nan], [[1.0]]).is_finite())
        with self.assertRaises(InvalidDimensionError):
            gf.GaussianState([0.0, 1.0], np.eye(3))

    def test07b__dimension_mismatch(self):
        """Test the predict functions with a mismatched state.

        :Test:
            - Verify an InvalidDimensionError is raised by both.

        """
        dyn = gf.FunctionDynamicsModel(f=lambda x, e, k: x + e, Q=np.eye(3), state_dim=3,
                                       noise_dim=3)
        for predict in (gf.ekf_predict, gf.ukf_predict):
            with self.assertRaises(InvalidDimensionError):
                predict(gf.GaussianState([0.0, 0.0], np.eye(2)), dyn, 1)

    def test06d__ukf_update__projection_moments(self):
        """Test the moment-matched update against importance sampling.

        :Test:
            - For the pinhole projection ``h(x) = f x1 / x2`` with a
              narrow prior, weight 10^6 prior samples by the likelihood
              and verify the posterior mean and variances agree with
              the cubature update to within four standard errors.

        """
        f, sigma_r = 1.5, 0.05
        state = gf.GaussianState([0.5, 4.0], np.diag([0.02**2, 0.02**2]))
        meas = gf.FunctionMeasurementModel(h=lambda x, k: np.array([f * x[0] / x[1]]),
                                           R=[[sigma_r**2]], meas_dim=1)
        y = np.array([f * 0.5 / 4.0 + 0.03])
        post, _ = gf.ukf_update(state, meas, y, 0)
        rng = np.random.default_rng(11)
        X = rng.multivariate_normal(state.mean, state.cov, size=1_000_000)
        w = np.exp(-0.5 * ((y[0] - f * X[:, 0] / X[:, 1]) / sigma_r)**2)
        w /= w.sum()
        ess = 1.0 / np.sum(w**2)
        mean = w @ X
        var = w @ (X - mean)**2
        se_mean = np.sqrt(var / ess)
        se_var = var * np.sqrt(2.0 / ess)
        self.assertGreater(ess, 5e5)
        self.assertTrue(np.all(np.abs(post.mean - mean) < 4 * se_mean),
                        msg=self._MSG1.format(mean, post.mean))
        self.assertTrue(np.all(np.abs(np.diag(post.cov) - var) < 4 * se_var),
                        msg=self._MSG1.format(var, np.diag(post.cov)))

    def test06e__ekf_update__cubic_sensor(self):
        """Test the linearised update on a scalar cubic sensor.

        :Test:
            - For ``h(x) = x^3`` with prior N(1, 0.01), R = 0.01 and
              y = 1.1, verify H = 3, S = 0.1, K = 0.3, a posterior mean
              of 1.03 and a posterior variance of 0.001.

        """
        state = gf.GaussianState([1.0], [[0.01]])
        meas = gf.FunctionMeasurementModel(h=lambda x, k: x**3, R=[[0.01]], meas_dim=1,
                                           jac=lambda x, k: np.array([[3 * x[0]**2]]))
        post, stats = gf.ekf_update(state, meas, np.array([1.1]), 0)
        self.assert_allclose(stats.innovation_mean, [1.0])
        self.assert_allclose(stats.innovation_cov, [[0.1]], atol=1e-15)
        gain = stats.cross_cov @ np.linalg.inv(stats.innovation_cov)
        self.assert_allclose(gain, [[0.3]], atol=1e-14)
        self.assert_allclose(post.mean, [1.03], atol=1e-14)
        self.assert_allclose(post.cov, [[0.001]], atol=1e-15)

    def test06f__update__non_finite_innovation(self):
        """Test the update functions with an overflowing sensor.

        :Test:
            - Use a sensor whose innovation covariance overflows to
              infinity and verify both updates raise NumericError
              rather than reporting a singular innovation.

        """
        state = gf.GaussianState([1.0, 0.0], np.eye(2))
        meas = gf.FunctionMeasurementModel(h=lambda x, k: 1e200 * x[:1], R=[[1.0]], meas_dim=1,
                                           jac=lambda x, k: np.array([[1e200, 0.0]]))
        for update in (gf.ekf_update, gf.ukf_update):
            with self.subTest(update=update.__name__):
                with np.errstate(over='ignore', invalid='ignore'):
                    with self.assertRaises(NumericError):
                        update(state, meas, np.array([1.0]), 0)
