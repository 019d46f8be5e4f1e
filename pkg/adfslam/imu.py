#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the quaternion-based IMU mechanisation
            model used as the prediction step of a visual-inertial
            odometry filter.

            The 19-dimensional state is laid out as (see
            :class:`VioState`)::

                p (3, m) | v (3, m/s) | q (4) | diag(T_a) (3) | b_a (3) | b_w (3)

            For each IMU sample ``(w, a, dt)`` and noise ``(e_a, e_w)``,
            the bias-corrected readings ``a~ = T_a a - b_a`` and
            ``w~ = w - b_w`` drive the update::

                q_k = Omega[(w~ + e_w) dt] q_{k-1}
                v_k = v_{k-1} + [q_k (a~ + e_a) q_k* - g] dt
                p_k = p_{k-1} + v_{k-1} dt

            The biases and the accelerometer scale follow unit dynamics.
            The quaternion ``(w, x, y, z)`` rotates body-frame vectors
            into the world frame, and ``Omega`` is the exact (orthogonal)
            quaternion increment for a constant body rate.

            The model can be propagated with either the EKF (finite
            difference Jacobians) or the UKF (cubature on the state
            augmented with the 6-dimensional noise).

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Propagate a stationary IMU for one sample under UKF prediction::

        >>> import numpy as np
        >>> from adfslam import imu

        >>> x = imu.initial_vio_state()
        >>> s = imu.ImuSample(omega=np.zeros(3), acc=imu.GRAVITY, dt=0.005)
        >>> x = imu.predict(x, s, Q=np.eye(6) * 1e-6, mode='UKF')

"""
# pylint: disable=invalid-name

import csv
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple
import numpy as np
# locals
from .errors import ImuFormatError, InvalidDimensionError, NonPsdCovarianceError, NumericError
from .gaussfilter import DynamicsModel, GaussianState, PREDICTORS

GRAVITY = np.array([0.0, 0.0, 9.81])
NOISE_DIM = 6
IMU_COLUMNS = ('t_ns', 'wx', 'wy', 'wz', 'ax', 'ay', 'az')
_SERIES_THRESHOLD = 1e-8


class VioState:
    """Block layout of the flat 19-dimensional VIO state."""

    P = slice(0, 3)
    V = slice(3, 6)
    Q = slice(6, 10)
    TA = slice(10, 13)
    BA = slice(13, 16)
    BW = slice(16, 19)
    DIM = 19
    BLOCKS = (('p', P), ('v', V), ('q', Q), ('T_a', TA), ('b_a', BA), ('b_w', BW))

    @classmethod
    def block_of(cls, index: int) -> str:
        """Name of the block which owns a state index."""
        for name, sl in cls.BLOCKS:
            if sl.start <= index < sl.stop:
                return name
        raise IndexError(f'State index {index} out of range for dimension {cls.DIM}.')

    @classmethod
    def pack(cls,
             p: Sequence[float]=(0, 0, 0),
             v: Sequence[float]=(0, 0, 0),
             q: Sequence[float]=(1, 0, 0, 0),
             T_a: Sequence[float]=(1, 1, 1),
             b_a: Sequence[float]=(0, 0, 0),
             b_w: Sequence[float]=(0, 0, 0)) -> np.ndarray:
        """Assemble a flat state vector from its blocks."""
        return np.concatenate([np.asarray(b, dtype=float) for b in (p, v, q, T_a, b_a, b_w)])

    @classmethod
    def unpack(cls, x: np.ndarray) -> dict:
        """Split a flat state vector into a dict of named blocks."""
        return {name: x[sl] for name, sl in cls.BLOCKS}


@dataclass(frozen=True)
class ImuSample:
    """A synchronised gyroscope/accelerometer pair.

    Attributes:
        omega (np.ndarray): Angular rate (3,), rad/s.
        acc (np.ndarray): Specific force (3,), m/s^2.
        dt (float): Sample interval, seconds.

    """

    omega: np.ndarray
    acc: np.ndarray
    dt: float

    def __post_init__(self):
        """Validate the sample."""
        w = np.asarray(self.omega, dtype=float)
        a = np.asarray(self.acc, dtype=float)
        if w.shape != (3,) or a.shape != (3,):
            raise InvalidDimensionError('IMU readings must be 3-vectors.')
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(a)) and np.isfinite(self.dt)):
            raise ImuFormatError('IMU sample contains non-finite values.')
        if not self.dt > 0:
            raise ImuFormatError(f'Sample interval must be positive, got {self.dt}.')
        object.__setattr__(self, 'omega', w)
        object.__setattr__(self, 'acc', a)


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    """Conjugate of a quaternion ``(w, x, y, z)``."""
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product ``p * q``."""
    pw, pv = p[0], np.asarray(p[1:])
    qw, qv = q[0], np.asarray(q[1:])
    return np.concatenate(([pw * qw - pv @ qv], pw * qv + qw * pv + np.cross(pv, qv)))


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Scale a quaternion to unit norm."""
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def quat_exp(phi: np.ndarray) -> np.ndarray:
    """Unit quaternion ``exp(phi / 2)`` for a rotation vector ``phi``."""
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi)
    if angle < _SERIES_THRESHOLD:
        return quat_normalize(np.concatenate(([1.0 - angle**2 / 8.0], phi * (0.5 - angle**2 / 48.0))))
    return np.concatenate(([np.cos(angle / 2)], np.sin(angle / 2) / angle * phi))


def quat_yaw(q: np.ndarray) -> float:
    """Heading (rotation about world z) of a quaternion, radians."""
    w, x, y, z = q
    return float(np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z)))


def omega_matrix(phi: np.ndarray) -> np.ndarray:
    """Exact quaternion increment matrix for a rotation increment.

    ``Omega[phi] q`` equals the product ``q * exp(phi / 2)``. The matrix
    is ``cos(|phi|/2) I + sin(|phi|/2)/|phi| [Phi]`` and is orthogonal;
    below ``|phi| < 1e-8`` the coefficients are taken from their power
    series.

    Args:
        phi (np.ndarray): Rotation increment (3,), radians.

    Returns:
        np.ndarray: The 4x4 increment matrix.

    """
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi)
    if angle < _SERIES_THRESHOLD:
        a, b = 1.0 - angle**2 / 8.0, 0.5 - angle**2 / 48.0
    else:
        a, b = np.cos(angle / 2), np.sin(angle / 2) / angle
    x, y, z = phi
    Phi = np.array([[0.0, -x, -y, -z],
                    [x, 0.0, z, -y],
                    [y, -z, 0.0, x],
                    [z, y, -x, 0.0]])
    return a * np.eye(4) + b * Phi


def rotate_vector(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate a vector by the sandwich product ``q v q*``.

    Args:
        q (np.ndarray): Quaternion ``(w, x, y, z)``.
        v (np.ndarray): Vector (3,).

    Returns:
        np.ndarray: The rotated vector (3,).

    """
    qv = np.concatenate(([0.0], np.asarray(v, dtype=float)))
    return quat_multiply(quat_multiply(q, qv), quat_conjugate(q))[1:]


def bias_correct(sample: ImuSample,
                 T_a: np.ndarray,
                 b_a: np.ndarray,
                 b_w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Apply the accelerometer scale and the bias corrections.

    Args:
        sample (ImuSample): Raw IMU sample.
        T_a (np.ndarray): Diagonal of the accelerometer scale (3,).
        b_a (np.ndarray): Accelerometer bias (3,).
        b_w (np.ndarray): Gyroscope bias (3,).

    Returns:
        tuple: ``(a~, w~)``.

    """
    return (np.asarray(T_a) * sample.acc - np.asarray(b_a),
            sample.omega - np.asarray(b_w))


def mechanize(x: np.ndarray,
              sample: ImuSample,
              eps_a: np.ndarray=None,
              eps_w: np.ndarray=None,
              g: np.ndarray=GRAVITY,
              renormalize: bool=True) -> np.ndarray:
    """Propagate a VIO state through one IMU sample.

    The quaternion is updated first, then the velocity (which uses the
    new quaternion), then the position (which uses the old velocity).

    Args:
        x (np.ndarray): Flat 19-dimensional state.
        sample (ImuSample): IMU sample.
        eps_a (np.ndarray, optional): Accelerometer noise (3,).
            Defaults to zero.
        eps_w (np.ndarray, optional): Gyroscope noise (3,).
            Defaults to zero.
        g (np.ndarray, optional): World-frame gravity.
            Defaults to ``(0, 0, 9.81)``.
        renormalize (bool, optional): Renormalise the output quaternion.
            Defaults to True.

    Returns:
        np.ndarray: The propagated state.

    """
    x = np.asarray(x, dtype=float)
    eps_a = np.zeros(3) if eps_a is None else eps_a
    eps_w = np.zeros(3) if eps_w is None else eps_w
    a_c, w_c = bias_correct(sample, x[VioState.TA], x[VioState.BA], x[VioState.BW])
    out = x.copy()
    q = omega_matrix((w_c + eps_w) * sample.dt) @ x[VioState.Q]
    if renormalize:
        q = quat_normalize(q)
    out[VioState.Q] = q
    out[VioState.V] = x[VioState.V] + (rotate_vector(q, a_c + eps_a) - g) * sample.dt
    out[VioState.P] = x[VioState.P] + x[VioState.V] * sample.dt
    return out


class VioDynamicsModel(DynamicsModel):
    """IMU mechanisation as a dynamics model with noise ``(e_a, e_w)``.

    The noise covariance for a sample is ``Q * dt``. Jacobians are
    central finite differences. The quaternion is not renormalised
    inside ``f``; :func:`predict` renormalises the predicted mean.

    Args:
        sample (ImuSample): IMU sample for the step.
        Q (np.ndarray): Noise spectral density (6, 6).
        g (np.ndarray, optional): World-frame gravity.
            Defaults to ``(0, 0, 9.81)``.

    """

    def __init__(self, sample: ImuSample, Q: np.ndarray, g: np.ndarray=GRAVITY):
        """VioDynamicsModel class initialiser."""
        self._sample = sample
        self._Q = np.asarray(Q, dtype=float).reshape(NOISE_DIM, NOISE_DIM) * sample.dt
        self._g = np.asarray(g, dtype=float)

    @property
    def noise_dim(self) -> int:
        """Accelerometer and gyroscope noise, 6."""
        return NOISE_DIM

    @property
    def state_dim(self) -> int:
        """The VIO state dimension, 19."""
        return VioState.DIM

    def f(self, x, eps, k=None):
        """Mechanise ``x`` with noise ``eps = (e_a, e_w)``."""
        return mechanize(x, self._sample, eps[:3], eps[3:], g=self._g, renormalize=False)

    def Q(self, k=None):
        """Noise covariance ``Q dt``."""
        return self._Q


def vio_dynamics_model(sample: ImuSample, Q: np.ndarray, g: np.ndarray=GRAVITY) -> VioDynamicsModel:
    """Build the IMU dynamics model for one sample.

    Args:
        sample (ImuSample): IMU sample.
        Q (np.ndarray): Noise spectral density (6, 6).
        g (np.ndarray, optional): World-frame gravity.

    Returns:
        VioDynamicsModel: The dynamics model.

    """
    return VioDynamicsModel(sample=sample, Q=Q, g=g)


def initial_vio_state(x0: np.ndarray=None,
                      vel_var: float=1e-6,
                      quat_var: float=1e-3,
                      other_var: float=1e-4) -> GaussianState:
    """Gaussian prior over the VIO state.

    Args:
        x0 (np.ndarray, optional): Initial mean. Defaults to the state at
            rest at the origin with identity orientation and unit scale.
        vel_var (float, optional): Velocity variance. Defaults to 1e-6.
        quat_var (float, optional): Quaternion variance.
            Defaults to 1e-3.
        other_var (float, optional): Variance of all other blocks.
            Defaults to 1e-4.

    Returns:
        GaussianState: The prior state.

    """
    x0 = VioState.pack() if x0 is None else np.asarray(x0, dtype=float)
    var = np.full(VioState.DIM, other_var)
    var[VioState.V] = vel_var
    var[VioState.Q] = quat_var
    return GaussianState(x0, np.diag(var))


def renormalize_quaternion(state: GaussianState) -> GaussianState:
    """Return a copy of a state with its quaternion mean at unit norm."""
    m = state.mean.copy()
    m[VioState.Q] = quat_normalize(m[VioState.Q])
    return GaussianState(m, state.cov)


def predict(state: GaussianState,
            sample: ImuSample,
            Q: np.ndarray,
            g: np.ndarray=GRAVITY,
            mode: str='UKF',
            renormalize: bool=True) -> GaussianState:
    """One EKF or UKF prediction step through an IMU sample.

    Args:
        state (GaussianState): Current VIO state.
        sample (ImuSample): IMU sample.
        Q (np.ndarray): Noise spectral density (6, 6).
        g (np.ndarray, optional): World-frame gravity.
        mode (str, optional): 'EKF' or 'UKF'. Defaults to 'UKF'.
        renormalize (bool, optional): Renormalise the quaternion mean.
            Defaults to True.

    Returns:
        GaussianState: The predicted state.

    """
    out = PREDICTORS[mode.upper()](state, vio_dynamics_model(sample, Q, g), 0)
    return renormalize_quaternion(out) if renormalize else out


def read_imu_csv(path: str) -> List[ImuSample]:
    """Read IMU samples from a CSV file.

    The file must have the header ``t_ns,wx,wy,wz,ax,ay,az`` (extra
    columns are ignored), with nanosecond timestamps strictly
    increasing. The interval of row *i* is ``t_i - t_{i-1}``; the first
    row takes the interval of the second.

    Args:
        path (str): Path to the CSV file.

    Raises:
        ImuFormatError: If the header is missing, a row cannot be
            parsed, timestamps are not strictly increasing, or fewer
            than two rows are present.

    Returns:
        list: A list of :class:`ImuSample` objects.

    """
    with open(path, newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = [h.strip().lstrip('#').strip() for h in next(reader, [])]
        if not set(IMU_COLUMNS).issubset(header):
            raise ImuFormatError(f'Header must contain the columns {",".join(IMU_COLUMNS)}.',
                                 line=1)
        cols = [header.index(c) for c in IMU_COLUMNS]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not ''.join(row).strip():
                continue
            try:
                vals = [row[c] for c in cols]
                t = int(vals[0])
                rows.append((lineno, t, np.array([float(v) for v in vals[1:]])))
            except (IndexError, ValueError) as err:
                raise ImuFormatError(f'Cannot parse row: {err}', line=lineno) from err
    if len(rows) < 2:
        raise ImuFormatError('At least two samples are required to determine the interval.')
    samples = []
    for i, (lineno, t, vals) in enumerate(rows):
        dt_ns = (t - rows[i - 1][1]) if i else (rows[1][1] - t)
        if dt_ns <= 0:
            raise ImuFormatError('Timestamps must be strictly increasing.', line=lineno)
        samples.append(ImuSample(omega=vals[:3], acc=vals[3:], dt=dt_ns * 1e-9))
    return samples


@dataclass
class PropagationReport:
    """Summary of an IMU propagation run.

    Attributes:
        mode (str): 'EKF' or 'UKF'.
        n_samples (int): Number of samples processed.
        norm_drift (float): Largest ``| |q| - 1 |`` of the filtered
            quaternion mean.
        raw_norm_deviation (float): Largest ``| |q| - 1 |`` of the
            predicted mean before renormalisation.
        cov_traces (list): Covariance trace after each sample.
        psd_violations (int): Samples whose covariance had a negative
            eigenvalue beyond roundoff.
        final_mean (np.ndarray): Final state mean.
        diverged (bool): True if propagation stopped on a non-finite or
            non-factorisable state.

    """

    mode: str
    n_samples: int = 0
    norm_drift: float = 0.0
    raw_norm_deviation: float = 0.0
    cov_traces: list = field(default_factory=list)
    psd_violations: int = 0
    final_mean: np.ndarray = None
    diverged: bool = False

    @property
    def final_yaw(self) -> float:
        """Heading of the final quaternion, radians."""
        return quat_yaw(self.final_mean[VioState.Q])


def propagate(samples: Sequence[ImuSample],
              Q: np.ndarray,
              mode: str='UKF',
              g: np.ndarray=GRAVITY,
              initial: GaussianState=None,
              renormalize: bool=True) -> Tuple[PropagationReport, list]:
    """Propagate a VIO state through a sequence of IMU samples.

    Args:
        samples (Sequence[ImuSample]): IMU samples, in time order.
        Q (np.ndarray): Noise spectral density (6, 6).
        mode (str, optional): 'EKF' or 'UKF'. Defaults to 'UKF'.
        g (np.ndarray, optional): World-frame gravity.
        initial (GaussianState, optional): Initial state. Defaults to
            :func:`initial_vio_state`.
        renormalize (bool, optional): Renormalise the quaternion mean
            after each step. Defaults to True.

    Returns:
        tuple: The :class:`PropagationReport` and a list of per-sample
        rows ``(step, p(3), v(3), q(4), q_norm, cov_trace, min_eig)``.

    """
    mode = mode.upper()
    x = initial if initial is not None else initial_vio_state()
    report = PropagationReport(mode=mode, final_mean=x.mean.copy())
    rows = []
    for i, s in enumerate(samples, start=1):
        try:
            raw = predict(x, s, Q, g=g, mode=mode, renormalize=False)
        except (NumericError, NonPsdCovarianceError):
            report.diverged = True
            break
        report.raw_norm_deviation = max(report.raw_norm_deviation,
                                        abs(np.linalg.norm(raw.mean[VioState.Q]) - 1.0))
        x = renormalize_quaternion(raw) if renormalize else raw
        if not x.is_finite():
            report.diverged = True
            break
        qn = float(np.linalg.norm(x.mean[VioState.Q]))
        tr = float(np.trace(x.cov))
        min_eig = float(np.linalg.eigvalsh(x.cov)[0])
        report.norm_drift = max(report.norm_drift, abs(qn - 1.0))
        report.cov_traces.append(tr)
        if min_eig < -1e-12 * max(tr, 1.0):
            report.psd_violations += 1
        report.n_samples = i
        report.final_mean = x.mean.copy()
        rows.append((i, *x.mean[VioState.P], *x.mean[VioState.V], *x.mean[VioState.Q],
                     qn, tr, min_eig))
    return report, rows
