#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides generic Gaussian assumed-density
            filtering for nonlinear state-space models of the form::

                x_k = f_k(x_{k-1}, e_k),    e_k ~ N(0, Q_k)
                y_k = h_k(x_k) + r_k,       r_k ~ N(0, R_k)

            The filtering density is constrained to a Gaussian
            :class:`GaussianState` at every step, and its moments are
            propagated through the nonlinear maps in one of two ways:

                - **Moment matching** (UKF): the Gaussian integrals are
                  approximated with the symmetric third-order cubature
                  rule (:func:`generate_cubature_points`). Non-additive
                  process noise is handled by augmenting the state with
                  the noise variables.
                - **Linearisation** (EKF): the maps are replaced by their
                  first-order Taylor expansion at the mean, using the
                  model's analytic Jacobians, or central finite
                  differences where none are provided.

            Both variants share the same Kalman update,
            :func:`kalman_update_core`.

            .. note::

                Every operation in this module is a pure function of
                its inputs. Returned covariance matrices are exactly
                symmetric.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Filter a scalar random walk observed through a cubic sensor::

        >>> import numpy as np
        >>> from adfslam import gaussfilter as gf

        >>> dyn = gf.FunctionDynamicsModel(f=lambda x, e, k: x + e,
                                           Q=np.eye(1) * 0.1,
                                           state_dim=1,
                                           noise_dim=1)
        >>> meas = gf.FunctionMeasurementModel(h=lambda x, k: x**3,
                                               R=np.eye(1) * 0.01,
                                               meas_dim=1)
        >>> x = gf.GaussianState(mean=[1.0], cov=[[0.01]])
        >>> x = gf.ukf_predict(x, dyn, k=1)
        >>> x, stats = gf.ukf_update(x, meas, y=np.array([1.1]), k=1)

"""
# pylint: disable=invalid-name

import abc
from dataclasses import dataclass
from typing import Callable, Tuple, Union
import numpy as np
from scipy import linalg
# locals
from .errors import (InvalidDimensionError,
                     NonPsdCovarianceError,
                     NumericError,
                     ShapeError,
                     SingularInnovationError)

#: Relative jitter levels tried, in order, before a covariance is declared
#: non-PSD. Each level is scaled by trace(P)/d.
JITTER_SCHEDULE = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)


def symmetrize(P: np.ndarray) -> np.ndarray:
    """Return the symmetric part of a square matrix.

    Args:
        P (np.ndarray): Square matrix.

    Returns:
        np.ndarray: ``(P + P.T) / 2``, which is exactly symmetric.

    """
    return 0.5 * (P + P.T)


class GaussianState:
    """Gaussian density N(mean, cov) over a flat state vector.

    Args:
        mean (array-like): Mean vector of length d.
        cov (array-like): Covariance matrix of shape (d, d). The matrix
            is symmetrised on construction.

    Raises:
        InvalidDimensionError: If the mean and covariance dimensions do
            not agree.

    """

    __slots__ = ('_mean', '_cov')

    def __init__(self, mean, cov):
        """GaussianState class initialiser."""
        m = np.atleast_1d(np.asarray(mean, dtype=float)).ravel()
        P = np.atleast_2d(np.asarray(cov, dtype=float))
        if P.shape != (m.size, m.size):
            raise InvalidDimensionError(f'Mean of length {m.size} does not agree with a '
                                        f'covariance of shape {P.shape}.')
        self._mean = m
        self._cov = symmetrize(P)

    def __repr__(self) -> str:
        """Short representation of the state."""
        return f'GaussianState(dim={self.dim})'

    @property
    def cov(self) -> np.ndarray:
        """Covariance matrix."""
        return self._cov

    @property
    def dim(self) -> int:
        """Dimension of the state."""
        return self._mean.size

    @property
    def mean(self) -> np.ndarray:
        """Mean vector."""
        return self._mean

    def is_finite(self) -> bool:
        """Test whether all mean and covariance entries are finite.

        Returns:
            bool: True if the mean and covariance are finite, otherwise
            False.

        """
        return bool(np.all(np.isfinite(self._mean)) and np.all(np.isfinite(self._cov)))


@dataclass(frozen=True)
class CubaturePointSet:
    """Unit cubature points and weights for an n-dimensional rule.

    Attributes:
        unit_points (np.ndarray): Array of shape (2n, n), one unit point
            per row.
        weights (np.ndarray): Array of 2n weights, all 1/(2n).

    """

    unit_points: np.ndarray
    weights: np.ndarray

    @property
    def dim(self) -> int:
        """Dimension of the rule."""
        return self.unit_points.shape[1]

    def __len__(self) -> int:
        """Number of points in the rule."""
        return self.unit_points.shape[0]


@dataclass(frozen=True)
class InnovationStats:
    """Predicted measurement statistics used by the Kalman update.

    Attributes:
        innovation_mean (np.ndarray): Predicted measurement mean (m,).
        innovation_cov (np.ndarray): Innovation covariance S (m, m),
            measurement noise included.
        cross_cov (np.ndarray): State/measurement cross-covariance C
            (d, m).

    """

    innovation_mean: np.ndarray
    innovation_cov: np.ndarray
    cross_cov: np.ndarray


class DynamicsModel(abc.ABC):
    """Behavioural interface for x_k = f_k(x_{k-1}, e_k), e_k ~ N(0, Q_k).

    Subclasses provide :meth:`f` and :meth:`Q`, and may override
    :meth:`jacobian_x` and :meth:`jacobian_noise` with analytic forms.
    The default Jacobians are central finite differences.

    """

    #: Set True by subclasses which supply analytic Jacobians.
    analytic_jacobians = False

    @property
    @abc.abstractmethod
    def noise_dim(self) -> int:
        """Dimension s of the process noise."""

    @property
    @abc.abstractmethod
    def state_dim(self) -> int:
        """Dimension d of the state."""

    @abc.abstractmethod
    def f(self, x: np.ndarray, eps: np.ndarray, k: int) -> np.ndarray:
        """Evaluate the dynamics for state ``x`` and noise ``eps``."""

    @abc.abstractmethod
    def Q(self, k: int) -> np.ndarray:
        """Process noise covariance (s, s) at step ``k``."""

    def jacobian_noise(self, x: np.ndarray, eps: np.ndarray, k: int) -> np.ndarray:
        """Jacobian of :meth:`f` with respect to the noise, shape (d, s)."""
        if self.noise_dim == 0:
            return np.zeros((self.state_dim, 0))
        return finite_difference_jacobian(lambda e: self.f(x, e, k), eps)

    def jacobian_x(self, x: np.ndarray, eps: np.ndarray, k: int) -> np.ndarray:
        """Jacobian of :meth:`f` with respect to the state, shape (d, d)."""
        return finite_difference_jacobian(lambda x_: self.f(x_, eps, k), x)


class MeasurementModel(abc.ABC):
    """Behavioural interface for y_k = h_k(x_k) + r_k, r_k ~ N(0, R_k).

    Subclasses provide :meth:`h` and :meth:`R`, and may override
    :meth:`jacobian` with an analytic form. The default Jacobian is a
    central finite difference.

    """

    analytic_jacobians = False

    @property
    @abc.abstractmethod
    def meas_dim(self) -> int:
        """Dimension m of the measurement."""

    @abc.abstractmethod
    def h(self, x: np.ndarray, k: int) -> np.ndarray:
        """Evaluate the noiseless measurement for state ``x``."""

    @abc.abstractmethod
    def R(self, k: int) -> np.ndarray:
        """Measurement noise covariance (m, m) at step ``k``."""

    def jacobian(self, x: np.ndarray, k: int) -> np.ndarray:
        """Jacobian of :meth:`h` with respect to the state, shape (m, d)."""
        return finite_difference_jacobian(lambda x_: self.h(x_, k), x)


_MatrixOrFn = Union[np.ndarray, Callable[[int], np.ndarray]]


def _as_matrix_fn(M: _MatrixOrFn) -> Callable[[int], np.ndarray]:
    """Wrap a constant matrix as a function of the step index."""
    if callable(M):
        return M
    M_ = np.atleast_2d(np.asarray(M, dtype=float))
    return lambda k: M_


class FunctionDynamicsModel(DynamicsModel):
    """Dynamics model assembled from plain callables.

    Args:
        f (Callable): Dynamics ``f(x, eps, k) -> x_next``.
        Q (np.ndarray | Callable): Process noise covariance, or a
            function ``Q(k)`` returning it.
        state_dim (int): State dimension d.
        noise_dim (int): Noise dimension s (may be zero).
        jac_x (Callable, optional): Analytic ``F_x(x, eps, k)``.
            Defaults to None (finite differences).
        jac_noise (Callable, optional): Analytic ``F_e(x, eps, k)``.
            Defaults to None (finite differences).

    """

    def __init__(self,
                 f: Callable,
                 Q: _MatrixOrFn,
                 state_dim: int,
                 noise_dim: int,
                 jac_x: Callable=None,
                 jac_noise: Callable=None):
        """FunctionDynamicsModel class initialiser."""
        self._f = f
        self._Q = _as_matrix_fn(Q) if noise_dim else (lambda k: np.zeros((0, 0)))
        self._d = int(state_dim)
        self._s = int(noise_dim)
        self._jx = jac_x
        self._je = jac_noise
        self.analytic_jacobians = jac_x is not None and jac_noise is not None

    @property
    def noise_dim(self) -> int:
        """Dimension s of the process noise."""
        return self._s

    @property
    def state_dim(self) -> int:
        """Dimension d of the state."""
        return self._d

    def f(self, x, eps, k):
        """Evaluate the wrapped dynamics function."""
        return np.asarray(self._f(x, eps, k), dtype=float)

    def Q(self, k):
        """Return the process noise covariance at step ``k``."""
        return self._Q(k)

    def jacobian_noise(self, x, eps, k):
        """Return the analytic noise Jacobian if provided."""
        if self._je is not None:
            return np.atleast_2d(np.asarray(self._je(x, eps, k), dtype=float))
        return super().jacobian_noise(x, eps, k)

    def jacobian_x(self, x, eps, k):
        """Return the analytic state Jacobian if provided."""
        if self._jx is not None:
            return np.atleast_2d(np.asarray(self._jx(x, eps, k), dtype=float))
        return super().jacobian_x(x, eps, k)


class FunctionMeasurementModel(MeasurementModel):
    """Measurement model assembled from plain callables.

    Args:
        h (Callable): Measurement function ``h(x, k) -> y``.
        R (np.ndarray | Callable): Measurement noise covariance, or a
            function ``R(k)`` returning it.
        meas_dim (int): Measurement dimension m.
        jac (Callable, optional): Analytic ``H_x(x, k)``. Defaults to
            None (finite differences).

    """

    def __init__(self, h: Callable, R: _MatrixOrFn, meas_dim: int, jac: Callable=None):
        """FunctionMeasurementModel class initialiser."""
        self._h = h
        self._R = _as_matrix_fn(R)
        self._m = int(meas_dim)
        self._jac = jac
        self.analytic_jacobians = jac is not None

    @property
    def meas_dim(self) -> int:
        """Dimension m of the measurement."""
        return self._m

    def h(self, x, k):
        """Evaluate the wrapped measurement function."""
        return np.atleast_1d(np.asarray(self._h(x, k), dtype=float))

    def R(self, k):
        """Return the measurement noise covariance at step ``k``."""
        return self._R(k)

    def jacobian(self, x, k):
        """Return the analytic Jacobian if provided."""
        if self._jac is not None:
            return np.atleast_2d(np.asarray(self._jac(x, k), dtype=float))
        return super().jacobian(x, k)


def generate_cubature_points(n: int) -> CubaturePointSet:
    """Generate the symmetric third-order cubature rule in n dimensions.

    The 2n unit points are ``+sqrt(n) e_i`` for i = 1..n followed by
    ``-sqrt(n) e_i``, each with weight 1/(2n). The rule integrates
    polynomials of total degree <= 3 exactly against N(0, I).

    Args:
        n (int): Dimension of the rule.

    Raises:
        InvalidDimensionError: If ``n`` is less than one.

    Returns:
        CubaturePointSet: The unit points and weights.

    """
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f'Cubature dimension must be a positive integer, got {n}.')
    n = int(n)
    scaled = np.sqrt(n) * np.eye(n)
    return CubaturePointSet(unit_points=np.vstack((scaled, -scaled)),
                            weights=np.full(2 * n, 1.0 / (2 * n)))


def cholesky_sqrt(P: np.ndarray, return_jitter: bool=False):
    """Lower Cholesky factor of a covariance, with escalating jitter.

    The jitter levels in :data:`JITTER_SCHEDULE`, scaled by trace(P)/d
    (or by one for a zero-trace matrix), are tried in order until the
    factorisation of ``P + jI`` succeeds.

    Args:
        P (np.ndarray): Symmetric matrix.
        return_jitter (bool, optional): Also return the applied jitter.
            Defaults to False.

    Raises:
        NumericError: If ``P`` contains non-finite values.
        NonPsdCovarianceError: If the factorisation fails at the largest
            jitter level.

    Returns:
        np.ndarray | tuple: The lower-triangular factor L, or the tuple
        ``(L, jitter)`` if ``return_jitter`` is True.

    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if not np.all(np.isfinite(P)):
        raise NumericError('Cannot factorise a covariance with non-finite entries.')
    d = P.shape[0]
    scale = np.trace(P) / d if d else 1.0
    if scale <= 0:
        scale = 1.0
    eye = np.eye(d)
    j = 0.0
    for level in JITTER_SCHEDULE:
        j = level * scale
        try:
            L = linalg.cholesky(P + j * eye, lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        return (L, j) if return_jitter else L
    raise NonPsdCovarianceError(f'Covariance is not positive semi-definite (jitter {j:.3g} '
                                'exhausted).', jitter=j)


def finite_difference_jacobian(g: Callable[[np.ndarray], np.ndarray],
                               x: np.ndarray,
                               h: float=None) -> np.ndarray:
    """Central finite-difference Jacobian of ``g`` at ``x``.

    Column i is ``(g(x + h_i e_i) - g(x - h_i e_i)) / (2 h_i)``.

    Args:
        g (Callable): Vector function of one vector argument.
        x (np.ndarray): Evaluation point.
        h (float, optional): Step size. If None, the per-coordinate step
            ``max(1e-6, 1e-6 * |x_i|)`` is used. Defaults to None.

    Raises:
        NumericError: If any evaluation is non-finite. The ``index``
            attribute holds the perturbed coordinate.

    Returns:
        np.ndarray: Jacobian of shape (len(g(x)), len(x)).

    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    steps = np.maximum(1e-6, 1e-6 * np.abs(x)) if h is None else np.full(x.size, float(h))
    cols = []
    for i, hi in enumerate(steps):
        dx = np.zeros_like(x)
        dx[i] = hi
        gp = np.atleast_1d(np.asarray(g(x + dx), dtype=float))
        gm = np.atleast_1d(np.asarray(g(x - dx), dtype=float))
        if not (np.all(np.isfinite(gp)) and np.all(np.isfinite(gm))):
            raise NumericError(f'Non-finite evaluation perturbing coordinate {i}.', index=i)
        cols.append((gp - gm) / (2.0 * hi))
    if not cols:
        return np.zeros((np.atleast_1d(g(x)).size, 0))
    return np.column_stack(cols)


def sigma_points(state: GaussianState, rule: CubaturePointSet=None) -> np.ndarray:
    """Sigma points ``z_i = mean + L xi_i`` for a Gaussian state.

    Args:
        state (GaussianState): State to be sampled.
        rule (CubaturePointSet, optional): Unit point set. If None, the
            cubature rule of the state dimension is used.
            Defaults to None.

    Raises:
        InvalidDimensionError: If the rule and state dimensions differ.

    Returns:
        np.ndarray: Sigma points of shape (2n, n), one per row.

    """
    rule = rule or generate_cubature_points(state.dim)
    if rule.dim != state.dim:
        raise InvalidDimensionError(f'Rule dimension {rule.dim} does not match the state '
                                    f'dimension {state.dim}.')
    L = cholesky_sqrt(state.cov)
    return state.mean + rule.unit_points @ L.T


def transform_moments(g: Callable[[np.ndarray], np.ndarray],
                      state: GaussianState,
                      rule: CubaturePointSet=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Moment-match the image of a Gaussian under a nonlinear map.

    Args:
        g (Callable): Vector function of one vector argument.
        state (GaussianState): Input Gaussian.
        rule (CubaturePointSet, optional): Unit point set. Defaults to
            the cubature rule of the state dimension.

    Raises:
        ShapeError: If ``g`` returns outputs of inconsistent length.
        NumericError: If ``g`` returns a non-finite value. The ``index``
            attribute holds the sigma-point index.

    Returns:
        tuple: ``(mean_out, cov_out, cross_cov)`` where ``cov_out``
        excludes any additive noise.

    """
    rule = rule or generate_cubature_points(state.dim)
    Z = sigma_points(state, rule)
    Y = None
    for i, z in enumerate(Z):
        yi = np.atleast_1d(np.asarray(g(z), dtype=float)).ravel()
        if Y is None:
            Y = np.empty((len(Z), yi.size))
        elif yi.size != Y.shape[1]:
            raise ShapeError(f'Sigma point {i} mapped to length {yi.size}; '
                             f'expected {Y.shape[1]}.')
        if not np.all(np.isfinite(yi)):
            raise NumericError(f'Non-finite output at sigma point {i}.', index=i)
        Y[i] = yi
    w = rule.weights
    mean_out = w @ Y
    dY = Y - mean_out
    dZ = Z - state.mean
    cov_out = symmetrize((dY.T * w) @ dY)
    cross_cov = (dZ.T * w) @ dY
    return mean_out, cov_out, cross_cov


def kalman_update_core(pred: GaussianState, stats: InnovationStats, y: np.ndarray) -> GaussianState:
    """Shared Kalman update for linearised and moment-matched filters.

    Computes ``K = C S^-1``, ``m = m- + K (y - mu)`` and
    ``P = P- - K S K^T``.

    Args:
        pred (GaussianState): Predictive state.
        stats (InnovationStats): Predicted measurement statistics.
        y (np.ndarray): Observed measurement.

    Raises:
        InvalidDimensionError: If the dimensions are inconsistent.
        NumericError: If the innovation statistics are non-finite.
        SingularInnovationError: If S is not positive definite.

    Returns:
        GaussianState: The posterior state.

    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mu, S, C = stats.innovation_mean, stats.innovation_cov, stats.cross_cov
    if y.shape != mu.shape or S.shape != (y.size, y.size) or C.shape != (pred.dim, y.size):
        raise InvalidDimensionError('Innovation statistics are inconsistent with the state '
                                    'and measurement dimensions.')
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(S)) and np.all(np.isfinite(C))):
        raise NumericError('Innovation statistics are non-finite.')
    try:
        cf = linalg.cho_factor(symmetrize(S), lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as err:
        raise SingularInnovationError('Innovation covariance is not invertible.') from err
    K = linalg.cho_solve(cf, C.T).T
    mean = pred.mean + K @ (y - mu)
    cov = pred.cov - K @ S @ K.T
    return GaussianState(mean, cov)


def ukf_predict(state: GaussianState, dyn: DynamicsModel, k: int) -> GaussianState:
    """Moment-matched prediction through non-additive dynamics.

    The state is augmented with the process noise, ``(x, e)`` with mean
    ``(m, 0)`` and covariance ``blkdiag(P, Q_k)``, and the 2(d+s)
    cubature points are propagated through ``f``.

    Args:
        state (GaussianState): Filtering state at step k-1.
        dyn (DynamicsModel): Dynamics model.
        k (int): Step index.

    Raises:
        InvalidDimensionError: If the state and model dimensions differ.
        NumericError: If the propagated moments are non-finite.
        NonPsdCovarianceError: If the augmented covariance cannot be
            factorised.

    Returns:
        GaussianState: The predictive state at step k.

    """
    d, s = dyn.state_dim, dyn.noise_dim
    if state.dim != d:
        raise InvalidDimensionError(f'State dimension {state.dim} does not match the '
                                    f'dynamics dimension {d}.')
    if s == 0:
        none = np.zeros(0)
        mean, cov, _ = transform_moments(lambda x: dyn.f(x, none, k), state)
    else:
        aug = GaussianState(np.concatenate((state.mean, np.zeros(s))),
                            linalg.block_diag(state.cov, dyn.Q(k)))
        mean, cov, _ = transform_moments(lambda z: dyn.f(z[:d], z[d:], k), aug)
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise NumericError('Propagated moments are non-finite.')
    return GaussianState(mean, cov)


def ukf_update(state: GaussianState,
               meas: MeasurementModel,
               y: np.ndarray,
               k: int) -> Tuple[GaussianState, InnovationStats]:
    """Moment-matched measurement update.

    Args:
        state (GaussianState): Predictive state.
        meas (MeasurementModel): Measurement model.
        y (np.ndarray): Observed measurement of length m.
        k (int): Step index.

    Raises:
        InvalidDimensionError: If ``y`` does not match the model.
        NumericError: If the propagated statistics are non-finite.
        SingularInnovationError: If S is not invertible.

    Returns:
        tuple: The posterior :class:`GaussianState` and the
        :class:`InnovationStats` used.

    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != meas.meas_dim:
        raise InvalidDimensionError(f'Measurement of length {y.size}; expected {meas.meas_dim}.')
    mu, S0, C = transform_moments(lambda x: meas.h(x, k), state)
    stats = InnovationStats(innovation_mean=mu,
                            innovation_cov=symmetrize(S0 + meas.R(k)),
                            cross_cov=C)
    return kalman_update_core(state, stats, y), stats


def ekf_predict(state: GaussianState, dyn: DynamicsModel, k: int) -> GaussianState:
    """Linearised (EKF) prediction.

    ``m- = f(m, 0)`` and ``P- = F_x P F_x^T + F_e Q F_e^T``. For a
    linear model this is the exact Kalman prediction.

    Args:
        state (GaussianState): Filtering state at step k-1.
        dyn (DynamicsModel): Dynamics model.
        k (int): Step index.

    Raises:
        InvalidDimensionError: If the state and model dimensions differ.
        NumericError: If the predicted moments are non-finite.

    Returns:
        GaussianState: The predictive state at step k.

    """
    if state.dim != dyn.state_dim:
        raise InvalidDimensionError(f'State dimension {state.dim} does not match the '
                                    f'dynamics dimension {dyn.state_dim}.')
    eps = np.zeros(dyn.noise_dim)
    m = state.mean
    mean = np.asarray(dyn.f(m, eps, k), dtype=float)
    Fx = dyn.jacobian_x(m, eps, k)
    cov = Fx @ state.cov @ Fx.T
    if dyn.noise_dim:
        Fe = dyn.jacobian_noise(m, eps, k)
        cov = cov + Fe @ dyn.Q(k) @ Fe.T
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise NumericError('Predicted moments are non-finite.')
    return GaussianState(mean, cov)


def ekf_update(state: GaussianState,
               meas: MeasurementModel,
               y: np.ndarray,
               k: int) -> Tuple[GaussianState, InnovationStats]:
    """Linearised (EKF) measurement update.

    The predicted measurement is ``h(m-)``; the Jacobian H is used only
    for ``S = H P- H^T + R`` and ``C = P- H^T``.

    Args:
        state (GaussianState): Predictive state.
        meas (MeasurementModel): Measurement model.
        y (np.ndarray): Observed measurement of length m.
        k (int): Step index.

    Raises:
        InvalidDimensionError: If ``y`` does not match the model.
        NumericError: If the linearised statistics are non-finite.
        SingularInnovationError: If S is not invertible.

    Returns:
        tuple: The posterior :class:`GaussianState` and the
        :class:`InnovationStats` used.

    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != meas.meas_dim:
        raise InvalidDimensionError(f'Measurement of length {y.size}; expected {meas.meas_dim}.')
    m, P = state.mean, state.cov
    H = meas.jacobian(m, k)
    PHt = P @ H.T
    stats = InnovationStats(innovation_mean=np.atleast_1d(np.asarray(meas.h(m, k), dtype=float)),
                            innovation_cov=symmetrize(H @ PHt + meas.R(k)),
                            cross_cov=PHt)
    return kalman_update_core(state, stats, y), stats


#: Filter operations keyed by mode name, as used by the benchmark harness.
PREDICTORS = {'EKF': ekf_predict, 'UKF': ukf_predict}
UPDATERS = {'EKF': ekf_update, 'UKF': ukf_update}
