#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the two-dimensional SLAM model: a joint
            camera pose and landmark state, 1D pinhole projection
            measurements and additive odometry dynamics.

            The flat state vector is laid out as::

                (p_x, p_y, theta, x_1, y_1, x_2, y_2, ..., x_p, y_p)

            where ``(p_x, p_y, theta)`` is the camera pose (metres,
            radians) and ``(x_i, y_i)`` is the world position of
            landmark *i* (metres). The layout is described by
            :class:`Slam2dState`.

            A landmark ``l`` is observed by a camera at pose ``(p, theta)``
            through its camera-frame coordinates ``c = R(theta)^T (l - p)``.
            The second component of ``c`` is the depth along the optical
            axis, and the 1D image coordinate is ``f c_1 / c_2 + c``.

            .. note::

                The heading ``theta`` is stored unwrapped. All
                trigonometric evaluations are invariant to a 2*pi shift.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Project a landmark into the 1D image of a camera at the origin::

        >>> import numpy as np
        >>> from adfslam import slam2d

        >>> intr = slam2d.CameraIntrinsics2d(f=1.5)
        >>> slam2d.project_landmark(np.zeros(3), np.array([1.0, 1.0]), intr)
        1.5

"""
# pylint: disable=invalid-name

from dataclasses import dataclass
from typing import Sequence, Tuple
import numpy as np
from scipy import stats
# locals
from .errors import ConfigError, DegenerateDepthError, InvalidDimensionError, NoMeasurementError
from .gaussfilter import DynamicsModel, GaussianState, MeasurementModel

POSE_DIM = 3
LANDMARK_DIM = 2
DEFAULT_POSE_COV = (1e-4, 1e-4, 1e-6)
DEFAULT_PRIOR_STD = 4.0


@dataclass(frozen=True)
class CameraIntrinsics2d:
    """Intrinsic parameters of the 1D pinhole camera.

    Attributes:
        f (float): Focal length, in normalised image units.
        c (float): Principal point, in normalised image units.
        image_halfwidth (float): Half-width of the visible image
            about the principal point.
        depth_epsilon (float): Smallest depth (metres) at which a
            landmark is considered in front of the camera.

    """

    f: float = 1.5
    c: float = 0.0
    image_halfwidth: float = 1.0
    depth_epsilon: float = 1e-3

    def __post_init__(self):
        """Validate the intrinsic parameters."""
        if not self.f > 0:
            raise ConfigError('must be positive', field='focal_length')
        if not self.image_halfwidth > 0:
            raise ConfigError('must be positive', field='image_halfwidth')
        if not self.depth_epsilon > 0:
            raise ConfigError('must be positive', field='depth_epsilon')


@dataclass(frozen=True)
class OdometryControl:
    """Odometry increment applied to the pose for one step.

    Attributes:
        dp (np.ndarray): Translation increment (2,), metres, world frame.
        dtheta (float): Heading increment, radians.

    """

    dp: np.ndarray
    dtheta: float

    def as_vector(self) -> np.ndarray:
        """Return the increment as ``(dp_x, dp_y, dtheta)``."""
        return np.array([self.dp[0], self.dp[1], self.dtheta], dtype=float)


class Slam2dState:
    """Block layout of a flat SLAM state with a pose and p landmarks.

    Args:
        n_landmarks (int): Number of landmark blocks, p >= 0.

    """

    def __init__(self, n_landmarks: int):
        """Slam2dState class initialiser."""
        if n_landmarks < 0:
            raise InvalidDimensionError('The landmark count cannot be negative.')
        self._p = int(n_landmarks)

    @property
    def dim(self) -> int:
        """Dimension of the flat state, 3 + 2p."""
        return POSE_DIM + LANDMARK_DIM * self._p

    @property
    def n_landmarks(self) -> int:
        """Number of landmark blocks."""
        return self._p

    @property
    def pose_slice(self) -> slice:
        """Slice of the pose block."""
        return slice(0, POSE_DIM)

    def block_of(self, index: int) -> str:
        """Name of the block which owns a state index.

        Args:
            index (int): Index into the flat state.

        Raises:
            IndexError: If the index is out of range.

        Returns:
            str: ``'pose'`` or ``'landmark:<i>'``.

        """
        if not 0 <= index < self.dim:
            raise IndexError(f'State index {index} out of range for dimension {self.dim}.')
        if index < POSE_DIM:
            return 'pose'
        return f'landmark:{(index - POSE_DIM) // LANDMARK_DIM}'

    def blocks(self) -> list:
        """All blocks as ``(name, slice)`` pairs, in state order."""
        return [('pose', self.pose_slice)] + [(f'landmark:{i}', self.landmark_slice(i))
                                              for i in range(self._p)]

    def landmark(self, x: np.ndarray, i: int) -> np.ndarray:
        """Extract landmark *i* from a flat state vector."""
        return x[self.landmark_slice(i)]

    def landmarks(self, x: np.ndarray) -> np.ndarray:
        """Extract all landmarks as an array of shape (p, 2)."""
        return x[POSE_DIM:].reshape(self._p, LANDMARK_DIM)

    def landmark_slice(self, i: int) -> slice:
        """Slice of landmark block *i*."""
        if not 0 <= i < self._p:
            raise IndexError(f'Landmark {i} out of range for {self._p} landmarks.')
        start = POSE_DIM + LANDMARK_DIM * i
        return slice(start, start + LANDMARK_DIM)

    @staticmethod
    def pose(x: np.ndarray) -> np.ndarray:
        """Extract the pose ``(p_x, p_y, theta)`` from a flat state vector."""
        return x[:POSE_DIM]


def rotation_matrix(theta: float) -> np.ndarray:
    """Camera-to-world rotation matrix for heading ``theta``.

    Args:
        theta (float): Heading, radians.

    Returns:
        np.ndarray: ``[[cos, -sin], [sin, cos]]``.

    """
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def camera_frame(pose: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Camera-frame coordinates ``R(theta)^T (l - p)`` of world points.

    Args:
        pose (np.ndarray): Camera pose ``(p_x, p_y, theta)``.
        points (np.ndarray): A single point (2,) or points (n, 2).

    Returns:
        np.ndarray: Camera-frame coordinates of the same shape as
        ``points``; the last axis holds ``(lateral, depth)``.

    """
    pose = np.asarray(pose, dtype=float)
    d = np.asarray(points, dtype=float) - pose[:2]
    c, s = np.cos(pose[2]), np.sin(pose[2])
    return np.stack((c * d[..., 0] + s * d[..., 1], -s * d[..., 0] + c * d[..., 1]), axis=-1)


def project_landmark(pose: np.ndarray, landmark: np.ndarray, intr: CameraIntrinsics2d) -> float:
    """Project a landmark into the camera's 1D image.

    Args:
        pose (np.ndarray): Camera pose ``(p_x, p_y, theta)``.
        landmark (np.ndarray): World position (2,).
        intr (CameraIntrinsics2d): Camera intrinsics.

    Raises:
        DegenerateDepthError: If the absolute depth is below
            ``intr.depth_epsilon``.

    Returns:
        float: The image coordinate ``f c_1 / c_2 + c``.

    """
    c1, c2 = camera_frame(pose, landmark)
    if abs(c2) < intr.depth_epsilon:
        raise DegenerateDepthError(f'Landmark depth {c2:.3g} is below {intr.depth_epsilon}.')
    return float(intr.f * c1 / c2 + intr.c)


def _projection_rows(x: np.ndarray,
                     layout: Slam2dState,
                     indices: np.ndarray,
                     intr: CameraIntrinsics2d,
                     clamp_depth: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Camera-frame coordinates for a set of landmarks of a flat state.

    Returns:
        tuple: The lateral and depth arrays. When ``clamp_depth`` is
        True, depths smaller than ``depth_epsilon`` in magnitude are
        moved to ``+/-depth_epsilon`` (keeping their sign).

    """
    cf = camera_frame(x[:POSE_DIM], layout.landmarks(x)[indices])
    c1, c2 = cf[:, 0], cf[:, 1]
    small = np.abs(c2) < intr.depth_epsilon
    if np.any(small):
        if not clamp_depth:
            raise DegenerateDepthError('Landmark depth is below '
                                       f'{intr.depth_epsilon} at the evaluation point.')
        c2 = np.where(small, np.where(c2 < 0, -intr.depth_epsilon, intr.depth_epsilon), c2)
    return c1, c2


def _jacobian_rows(x: np.ndarray,
                   layout: Slam2dState,
                   indices: np.ndarray,
                   intr: CameraIntrinsics2d,
                   clamp_depth: bool) -> np.ndarray:
    """Analytic Jacobian of the stacked projections, shape (k, 3 + 2p)."""
    c1, c2 = _projection_rows(x, layout, indices, intr, clamp_depth)
    th = x[2]
    cos, sin = np.cos(th), np.sin(th)
    a = intr.f / c2
    b = -intr.f * c1 / c2**2
    dlx = a * cos - b * sin
    dly = a * sin + b * cos
    H = np.zeros((len(indices), layout.dim))
    rows = np.arange(len(indices))
    H[rows, 0] = -dlx
    H[rows, 1] = -dly
    H[rows, 2] = intr.f * (1.0 + (c1 / c2)**2)
    cols = POSE_DIM + LANDMARK_DIM * np.asarray(indices)
    H[rows, cols] = dlx
    H[rows, cols + 1] = dly
    return H


def measurement_jacobian(mean: np.ndarray, i: int, intr: CameraIntrinsics2d) -> np.ndarray:
    """Jacobian row of the projection of landmark *i* at a state mean.

    Only the pose block and the block of landmark *i* are non-zero.

    Args:
        mean (np.ndarray): Flat state vector.
        i (int): Landmark index.
        intr (CameraIntrinsics2d): Camera intrinsics.

    Raises:
        DegenerateDepthError: If the landmark depth is degenerate.

    Returns:
        np.ndarray: Jacobian of shape (1, 3 + 2p).

    """
    mean = np.asarray(mean, dtype=float)
    layout = Slam2dState((mean.size - POSE_DIM) // LANDMARK_DIM)
    layout.landmark_slice(i)  # Range check.
    return _jacobian_rows(mean, layout, np.array([i]), intr, clamp_depth=False)


def visible_landmarks(pose: np.ndarray, landmarks: np.ndarray, intr: CameraIntrinsics2d) -> np.ndarray:
    """Indices of the landmarks inside the camera's field of view.

    A landmark is visible if its depth is at least ``depth_epsilon``
    and its image coordinate lies within ``image_halfwidth`` of the
    principal point.

    Args:
        pose (np.ndarray): Camera pose ``(p_x, p_y, theta)``.
        landmarks (np.ndarray): World positions (n, 2).
        intr (CameraIntrinsics2d): Camera intrinsics.

    Returns:
        np.ndarray: Ascending integer indices (possibly empty).

    """
    landmarks = np.asarray(landmarks, dtype=float).reshape(-1, LANDMARK_DIM)
    if not landmarks.size:
        return np.zeros(0, dtype=int)
    cf = camera_frame(pose, landmarks)
    depth = cf[:, 1]
    front = depth >= intr.depth_epsilon
    u = np.full(depth.shape, np.inf)
    u[front] = intr.f * cf[front, 0] / depth[front]
    return np.flatnonzero(front & (np.abs(u) <= intr.image_halfwidth))


class StackedMeasurementModel(MeasurementModel):
    """Projections of a set of landmarks, stacked into one measurement.

    Args:
        layout (Slam2dState): State layout.
        indices (Sequence[int]): Landmark indices, in measurement order.
        intr (CameraIntrinsics2d): Camera intrinsics.
        sigma_r (float): Measurement noise standard deviation.
        clamp_depth (bool, optional): Clamp degenerate depths to
            ``+/-depth_epsilon`` rather than raising, so the model can be
            evaluated at any sigma point. Defaults to True.

    """

    analytic_jacobians = True

    def __init__(self,
                 layout: Slam2dState,
                 indices: Sequence[int],
                 intr: CameraIntrinsics2d,
                 sigma_r: float,
                 clamp_depth: bool=True):
        """StackedMeasurementModel class initialiser."""
        self._layout = layout
        self._idx = np.asarray(indices, dtype=int)
        self._intr = intr
        self._R = np.eye(self._idx.size) * float(sigma_r)**2
        self._clamp = clamp_depth

    @property
    def indices(self) -> np.ndarray:
        """Landmark indices, in measurement order."""
        return self._idx

    @property
    def meas_dim(self) -> int:
        """Number of stacked projections."""
        return self._idx.size

    def h(self, x, k=None):
        """Stacked image coordinates at state ``x``."""
        c1, c2 = _projection_rows(np.asarray(x, dtype=float), self._layout, self._idx,
                                  self._intr, self._clamp)
        return self._intr.f * c1 / c2 + self._intr.c

    def jacobian(self, x, k=None):
        """Analytic stacked Jacobian at state ``x``."""
        return _jacobian_rows(np.asarray(x, dtype=float), self._layout, self._idx,
                              self._intr, self._clamp)

    def R(self, k=None):
        """Measurement noise covariance ``sigma_r^2 I``."""
        return self._R


def stacked_measurement_model(layout: Slam2dState,
                              visible: Sequence[int],
                              intr: CameraIntrinsics2d,
                              sigma_r: float) -> StackedMeasurementModel:
    """Build the stacked projection model for the visible landmarks.

    Args:
        layout (Slam2dState): State layout.
        visible (Sequence[int]): Visible landmark indices.
        intr (CameraIntrinsics2d): Camera intrinsics.
        sigma_r (float): Measurement noise standard deviation.

    Raises:
        NoMeasurementError: If no landmark is visible. The caller is
            expected to skip the update.

    Returns:
        StackedMeasurementModel: The measurement model.

    """
    if len(visible) == 0:
        raise NoMeasurementError('No landmark is visible; there is nothing to update with.')
    return StackedMeasurementModel(layout=layout, indices=visible, intr=intr, sigma_r=sigma_r)


class SlamDynamicsModel(DynamicsModel):
    """Additive odometry dynamics; landmarks follow unit dynamics.

    The pose block is incremented by the control plus noise
    ``e ~ N(0, Q_pose)``; landmark blocks are unchanged and carry no
    process noise. The model is linear, so :func:`ekf_predict` with the
    analytic Jacobians is the exact Kalman prediction.

    Args:
        control (OdometryControl): Odometry increment for the step.
        Q_pose (np.ndarray): Pose process noise covariance (3, 3).
        layout (Slam2dState): State layout.

    """

    analytic_jacobians = True

    def __init__(self, control: OdometryControl, Q_pose: np.ndarray, layout: Slam2dState):
        """SlamDynamicsModel class initialiser."""
        self._u = np.zeros(layout.dim)
        self._u[:POSE_DIM] = control.as_vector()
        self._Q = np.asarray(Q_pose, dtype=float).reshape(POSE_DIM, POSE_DIM)
        self._layout = layout
        self._G = np.zeros((layout.dim, POSE_DIM))
        self._G[:POSE_DIM] = np.eye(POSE_DIM)

    @property
    def noise_dim(self) -> int:
        """The pose noise dimension, 3."""
        return POSE_DIM

    @property
    def state_dim(self) -> int:
        """Dimension of the flat SLAM state."""
        return self._layout.dim

    def f(self, x, eps, k=None):
        """Apply the odometry increment and the pose noise."""
        return np.asarray(x, dtype=float) + self._u + self._G @ eps

    def Q(self, k=None):
        """Pose process noise covariance."""
        return self._Q

    def jacobian_noise(self, x, eps, k=None):
        """Noise enters the pose block only."""
        return self._G

    def jacobian_x(self, x, eps, k=None):
        """Identity."""
        return np.eye(self._layout.dim)


def slam_dynamics_model(control: OdometryControl,
                        Q_pose: np.ndarray,
                        layout: Slam2dState) -> SlamDynamicsModel:
    """Build the odometry dynamics model for one step.

    Args:
        control (OdometryControl): Odometry increment.
        Q_pose (np.ndarray): Pose process noise covariance (3, 3).
        layout (Slam2dState): State layout.

    Returns:
        SlamDynamicsModel: The dynamics model.

    """
    return SlamDynamicsModel(control=control, Q_pose=Q_pose, layout=layout)


def initialize_landmarks(guesses: np.ndarray, prior_std: float=DEFAULT_PRIOR_STD) -> GaussianState:
    """Independent Gaussian prior over the landmark blocks.

    Args:
        guesses (np.ndarray): Initial landmark positions (p, 2).
        prior_std (float, optional): Prior standard deviation per
            coordinate, metres. Defaults to 4.0.

    Returns:
        GaussianState: Landmark-only state with mean ``guesses`` and
        covariance ``prior_std^2 I``.

    """
    g = np.asarray(guesses, dtype=float).reshape(-1, LANDMARK_DIM)
    return GaussianState(g.ravel(), np.eye(g.size) * float(prior_std)**2)


def initial_state(pose: np.ndarray,
                  guesses: np.ndarray,
                  pose_cov: Sequence[float]=DEFAULT_POSE_COV,
                  prior_std: float=DEFAULT_PRIOR_STD) -> GaussianState:
    """Full SLAM prior: an anchored pose and the landmark prior.

    Args:
        pose (np.ndarray): Initial pose ``(p_x, p_y, theta)``.
        guesses (np.ndarray): Initial landmark positions (p, 2).
        pose_cov (Sequence[float], optional): Diagonal of the pose
            covariance. Defaults to ``(1e-4, 1e-4, 1e-6)``.
        prior_std (float, optional): Landmark prior standard deviation.
            Defaults to 4.0.

    Returns:
        GaussianState: The prior over the flat state.

    """
    lms = initialize_landmarks(guesses, prior_std)
    mean = np.concatenate((np.asarray(pose, dtype=float)[:POSE_DIM], lms.mean))
    cov = np.zeros((mean.size, mean.size))
    cov[:POSE_DIM, :POSE_DIM] = np.diag(pose_cov)
    cov[POSE_DIM:, POSE_DIM:] = lms.cov
    return GaussianState(mean, cov)


def marginal_ellipse(state: GaussianState, block: slice, mass: float=0.95) -> Tuple[np.ndarray,
                                                                                    np.ndarray,
                                                                                    float]:
    """Credible ellipse of a 2D marginal of the state.

    Args:
        state (GaussianState): The state.
        block (slice): Two-element slice, e.g. the pose translation
            ``slice(0, 2)`` or a landmark slice.
        mass (float, optional): Probability mass enclosed.
            Defaults to 0.95.

    Returns:
        tuple: The centre (2,), the semi-axes (major, minor) and the
        orientation of the major axis in radians.

    """
    centre = state.mean[block]
    P = state.cov[block, block]
    if P.shape != (2, 2):
        raise InvalidDimensionError('An ellipse requires a two-dimensional marginal.')
    vals, vecs = np.linalg.eigh(P)
    scale = stats.chi2.ppf(mass, df=2)
    axes = np.sqrt(scale * np.clip(vals[::-1], 0.0, None))
    major = vecs[:, 1]
    return centre.copy(), axes, float(np.arctan2(major[1], major[0]))
