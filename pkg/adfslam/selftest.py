#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the embedded invariant suite run by the
            ``selftest`` command.

            Each property is checked against randomly generated inputs
            from a fixed seed, and reports the largest error observed
            against the tolerance it must satisfy. The suite passes only
            if every property passes.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Run the suite and collect the outcome::

        >>> from adfslam.selftest import SelfTest

        >>> ok = SelfTest().run()

"""
# pylint: disable=invalid-name

import traceback
from dataclasses import dataclass
from typing import Callable, List
import numpy as np
# locals
from . import benchmark, gaussfilter as gf, imu, slam2d
from .reporter import reporter


@dataclass(frozen=True)
class PropertyResult:
    """Outcome of one property check.

    Attributes:
        name (str): Property name.
        tolerance (float): Largest acceptable error.
        error (float): Largest error observed; NaN if the check raised.
        passed (bool): True if ``error <= tolerance``.
        detail (str): Error text if the check raised.

    """

    name: str
    tolerance: float
    error: float
    passed: bool
    detail: str = ''


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Largest absolute difference, relative to ``max(1, |b|)``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def _random_cov(rng: np.random.Generator, d: int) -> np.ndarray:
    """Random well-conditioned covariance."""
    A = rng.normal(size=(d, d))
    return A @ A.T / d + 0.5 * np.eye(d)


def _linear_kf(m, P, A, Q, H, R, y):
    """Closed-form Kalman predict and update."""
    m, P = A @ m, A @ P @ A.T + Q
    S = H @ P @ H.T + R
    K = np.linalg.solve(S, H @ P).T
    return m + K @ (y - H @ m), P - K @ S @ K.T


class SelfTest:
    """Embedded invariant suite.

    Args:
        seed (int, optional): Seed of the random inputs. Defaults to 0.

    """

    def __init__(self, seed: int=0):
        """SelfTest class initialiser."""
        self._seed = seed
        self._results = []

    @property
    def properties(self) -> List[tuple]:
        """The ``(name, tolerance, check)`` triples of the suite."""
        return [('cubature_exactness', 1e-9, self._cubature_exactness),
                ('linear_equivalence', 1e-8, self._linear_equivalence),
                ('jacobian_agreement', 1e-6, self._jacobian_agreement),
                ('procrustes_recovery', 1e-9, self._procrustes_recovery),
                ('omega_orthogonality', 1e-12, self._omega_orthogonality),
                ('quaternion_norm', 1e-9, self._quaternion_norm),
                ('constant_rate_yaw', 1e-6, self._constant_rate_yaw),
                ('update_contraction', 1e-12, self._update_contraction)]

    @property
    def results(self) -> List[PropertyResult]:
        """Results of the most recent :meth:`run`."""
        return self._results

    def run(self) -> bool:
        """Check every property and report pass/fail with its tolerance.

        Returns:
            bool: True if every property passed, otherwise False.

        """
        self._results = [self._check(i, name, tol, fn)
                         for i, (name, tol, fn) in enumerate(self.properties)]
        for r in self._results:
            msg = f'{"PASS" if r.passed else "FAIL"}  {r.name:<22} error {r.error:.3e}  tol {r.tolerance:.0e}'
            if r.passed:
                reporter.info(msg)
            else:
                reporter.error(f'{msg}  {r.detail}'.rstrip())
        n_fail = sum(not r.passed for r in self._results)
        if n_fail:
            reporter.error(f'{n_fail} of {len(self._results)} properties failed.')
        else:
            reporter.info(f'All {len(self._results)} properties passed.')
        return not n_fail

    def _check(self, index: int, name: str, tol: float, fn: Callable) -> PropertyResult:
        """Run one property check; an exception fails the property."""
        rng = np.random.default_rng(np.random.SeedSequence(self._seed, spawn_key=(index,)))
        try:
            err = float(fn(rng))
        except Exception as exc:  # pylint: disable=broad-except
            reporter.debug(traceback.format_exc())
            return PropertyResult(name, tol, float('nan'), False, repr(exc))
        return PropertyResult(name, tol, err, bool(err <= tol))

    @staticmethod
    def _cubature_exactness(rng: np.random.Generator) -> float:
        """Cubature mean of random cubic polynomials against the closed form.

        For ``g(x) = c + a'x + x'Bx + (u'x)^3`` and ``x ~ N(m, P)``::

            E[g] = c + a'm + tr(BP) + m'Bm + mu^3 + 3 mu s2

        with ``mu = u'm`` and ``s2 = u'Pu``.

        """
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
            worst = max(worst, _rel_err(mean, exact))
        return worst

    @staticmethod
    def _linear_equivalence(rng: np.random.Generator) -> float:
        """EKF, UKF and the closed-form Kalman filter on linear models."""
        worst = 0.0
        for i in range(50):
            d, m_dim = 1 + i % 6, 1 + i % 3
            A = np.linalg.qr(rng.normal(size=(d, d)))[0] * 0.95
            H = rng.normal(size=(m_dim, d))
            Q, R = _random_cov(rng, d) * 0.1, _random_cov(rng, m_dim) * 0.1
            dyn = gf.FunctionDynamicsModel(f=lambda x, e, k, A=A: A @ x + e, Q=Q,
                                           state_dim=d, noise_dim=d)
            meas = gf.FunctionMeasurementModel(h=lambda x, k, H=H: H @ x, R=R, meas_dim=m_dim)
            m0, P0 = rng.normal(size=d), _random_cov(rng, d)
            ek = uk = gf.GaussianState(m0, P0)
            m, P = m0, P0
            for k in range(1, 101):
                y = rng.normal(size=m_dim)
                ek, _ = gf.ekf_update(gf.ekf_predict(ek, dyn, k), meas, y, k)
                uk, _ = gf.ukf_update(gf.ukf_predict(uk, dyn, k), meas, y, k)
                m, P = _linear_kf(m, P, A, Q, H, R, y)
                worst = max(worst, _rel_err(ek.mean, m), _rel_err(ek.cov, P),
                            _rel_err(uk.mean, m), _rel_err(uk.cov, P))
        return worst

    @staticmethod
    def _jacobian_agreement(rng: np.random.Generator) -> float:
        """Analytic projection Jacobian against central differences."""
        intr = slam2d.CameraIntrinsics2d()
        worst = 0.0
        for _ in range(100):
            pose = np.array([*rng.normal(size=2), rng.uniform(-np.pi, np.pi)])
            c = np.array([rng.uniform(-1, 1), rng.uniform(1, 5)])
            lm = pose[:2] + slam2d.rotation_matrix(pose[2]) @ c
            x = np.concatenate((pose, lm))
            H = slam2d.measurement_jacobian(x, 0, intr)
            Hfd = gf.finite_difference_jacobian(
                lambda z: [slam2d.project_landmark(z[:3], z[3:], intr)], x)
            worst = max(worst, _rel_err(H, Hfd))
        return worst

    @staticmethod
    def _procrustes_recovery(rng: np.random.Generator) -> float:
        """Recovery of random similarity transforms."""
        worst = 0.0
        for _ in range(100):
            pts = rng.normal(size=(int(rng.integers(3, 30)), 2)) * 5
            s = rng.uniform(0.2, 5.0)
            R = slam2d.rotation_matrix(rng.uniform(-np.pi, np.pi))
            t = rng.normal(size=2) * 10
            s_, R_, t_ = benchmark.procrustes_align(pts, benchmark.apply_similarity(pts, s, R, t))
            worst = max(worst, abs(s_ - s) / s, _rel_err(R_, R), _rel_err(t_, t))
        return worst

    @staticmethod
    def _omega_orthogonality(rng: np.random.Generator) -> float:
        """Orthogonality of the quaternion increment matrix."""
        scales = 10.0 ** rng.uniform(-10, 0, size=10_000)
        worst = 0.0
        for phi in rng.normal(size=(10_000, 3)) * scales[:, None]:
            W = imu.omega_matrix(phi)
            worst = max(worst, float(np.max(np.abs(W.T @ W - np.eye(4)))))
        return worst

    @staticmethod
    def _quaternion_norm(rng: np.random.Generator) -> float:
        """Quaternion norm over a long mechanisation with random readings."""
        x = imu.VioState.pack()
        worst = 0.0
        for w, a in zip(rng.normal(size=(10_000, 3)), rng.normal(size=(10_000, 3))):
            x = imu.mechanize(x, imu.ImuSample(omega=w, acc=a + imu.GRAVITY, dt=0.005))
            worst = max(worst, abs(np.linalg.norm(x[imu.VioState.Q]) - 1.0))
        return worst

    @staticmethod
    def _constant_rate_yaw(rng: np.random.Generator) -> float:  # pylint: disable=unused-argument
        """Yaw after one second at pi/2 rad/s about z, sampled at 1 kHz."""
        x = imu.VioState.pack()
        s = imu.ImuSample(omega=np.array([0.0, 0.0, np.pi / 2]), acc=imu.GRAVITY, dt=1e-3)
        for _ in range(1000):
            x = imu.mechanize(x, s)
        exact = np.array([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)])
        return float(np.max(np.abs(x[imu.VioState.Q] - exact)))

    @staticmethod
    def _update_contraction(rng: np.random.Generator) -> float:
        """Updates keep P symmetric and never increase it (P - P+ is PSD).

        Returns the largest asymmetry or negative eigenvalue of
        ``P - P+``, relative to trace(P).

        """
        worst = 0.0
        for i in range(50):
            d, m_dim = 2 + i % 5, 1 + i % 3
            state = gf.GaussianState(rng.normal(size=d), _random_cov(rng, d))
            W = rng.normal(size=(m_dim, d))
            meas = gf.FunctionMeasurementModel(h=lambda x, k, W=W: np.sin(W @ x),
                                               R=np.eye(m_dim) * 0.1, meas_dim=m_dim)
            for update in (gf.ekf_update, gf.ukf_update):
                post, _ = update(state, meas, rng.normal(size=m_dim), 0)
                scale = np.trace(state.cov)
                diff = state.cov - post.cov
                worst = max(worst,
                            float(np.max(np.abs(post.cov - post.cov.T))) / scale,
                            max(0.0, -float(np.linalg.eigvalsh(diff)[0])) / scale)
        return worst
