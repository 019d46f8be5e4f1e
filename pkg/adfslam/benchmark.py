#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the simulation and benchmark harness for
            comparing linearisation (EKF) and moment matching (UKF) SLAM
            under two perturbation studies:

                - **Feature misassignment** (``swap``): observations of
                  nearby visible landmarks are swapped with probability
                  ``rho``.
                - **Landmark initialisation noise** (``init_noise``): the
                  prior landmark means are the ground truth corrupted by
                  Gaussian noise of variance ``init_var``, while the
                  prior covariance stays at ``prior_std^2 I``.

            A run simulates a camera driving ``n_loops`` circuits of a
            circle inside a ring of landmarks, filters the odometry and
            the 1D projections, aligns the estimated map to the ground
            truth with a similarity (Procrustes) transform, applies the
            same transform to the path, and reports the RMSE of both,
            normalised by the scene diameter.

            All randomness is drawn from independent streams derived from
            the scenario seed (:func:`rng_stream`), so a corruption level
            never perturbs the scenario noise, and results do not depend
            on the order or the process in which runs are executed.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Compare the two filters on one scenario with 10% swapped
    observations::

        >>> from adfslam import benchmark
        >>> from adfslam.config import CorruptionSpec, ScenarioConfig

        >>> scn = benchmark.generate_scenario(ScenarioConfig(seed=7))
        >>> corr = CorruptionSpec(variant='swap', rho=0.1)
        >>> for mode in ('EKF', 'UKF'):
        ...     res = benchmark.run_slam(scn, corr, mode)
        ...     print(mode, res.path_rmse, res.map_rmse)

"""
# pylint: disable=invalid-name

import csv
import dataclasses
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple
import numpy as np
from scipy.spatial.distance import pdist
# locals
from . import slam2d
from .config import CorruptionSpec, FilterOptions, ScenarioConfig
from .errors import (ConfigError,
                     DegenerateAlignmentError,
                     DegenerateScenarioError,
                     NonPsdCovarianceError,
                     NumericError,
                     SingularInnovationError)
from .gaussfilter import UPDATERS, GaussianState, cholesky_sqrt, ekf_predict
from .reporter import reporter

# RNG stream identifiers.
STREAM_LANDMARKS = 0
STREAM_ODOMETRY = 1
STREAM_MEASUREMENT = 2
STREAM_SWAP = 3
STREAM_INIT = 4

RESULTS_COLUMNS = ('experiment', 'mode', 'level', 'seed', 'path_rmse', 'map_rmse', 'diverged',
                   'n_steps', 'n_landmarks', 'wall_ms')
AGGREGATE_COLUMNS = ('experiment', 'mode', 'level', 'n_runs', 'n_diverged', 'path_mean',
                     'path_std', 'map_mean', 'map_std')
MOVING_COLUMNS = ('mode', 'level', 'path_mean', 'path_std', 'map_mean', 'map_std')
TRAJECTORY_COLUMNS = ('step', 'gt_x', 'gt_y', 'gt_theta', 'est_x', 'est_y', 'est_theta',
                      'cov_trace')


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """Independent random generator for a (seed, stream) pair.

    Args:
        seed (int): Non-negative scenario seed.
        stream (int): Stream identifier, e.g. :data:`STREAM_SWAP`.

    Returns:
        np.random.Generator: A generator seeded from
        ``SeedSequence(seed, spawn_key=(stream,))``.

    """
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(stream,)))


@dataclass(frozen=True)
class Frame:
    """Landmark observations at one time step.

    Attributes:
        visible (np.ndarray): Ascending indices of the observed
            landmarks.
        values (np.ndarray): Image coordinates, aligned with
            ``visible``.

    """

    visible: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class Scenario:
    """A generated SLAM scenario.

    Attributes:
        config (ScenarioConfig): The generating configuration.
        intrinsics (CameraIntrinsics2d): Camera intrinsics.
        gt_path (np.ndarray): Ground-truth poses (n_steps + 1, 3); row 0
            is the start pose.
        gt_landmarks (np.ndarray): Ground-truth landmarks (p, 2).
        controls (list): One :class:`~slam2d.OdometryControl` per step.
        measurements (list): One noisy :class:`Frame` per step.
        noiseless_measurements (list): One noiseless :class:`Frame` per
            step.

    """

    config: ScenarioConfig
    intrinsics: slam2d.CameraIntrinsics2d
    gt_path: np.ndarray
    gt_landmarks: np.ndarray
    controls: list
    measurements: list
    noiseless_measurements: list


@dataclass(frozen=True)
class SwapAudit:
    """Record of a swap corruption.

    Attributes:
        opportunities (int): Draws for which a swap partner existed.
        swaps (list): ``(step, i, j)`` for each landmark pair exchanged.

    """

    opportunities: int
    swaps: list


@dataclass
class RunResult:
    """Outcome of one filter run.

    Attributes:
        experiment (str): Experiment name ('single', 'swap',
            'init_noise').
        mode (str): 'EKF' or 'UKF'.
        level (float): Corruption level (``rho`` or ``init_var``).
        seed (int): Scenario seed.
        path_rmse (float): Normalised path RMSE after alignment; NaN if
            diverged.
        map_rmse (float): Normalised map RMSE after alignment; NaN if
            diverged.
        diverged (bool): The run produced a non-finite or
            non-factorisable state.
        n_steps (int): Number of steps in the scenario.
        n_landmarks (int): Number of landmarks.
        wall_ms (float): Wall-clock duration of the run, milliseconds.
        pose_estimates (np.ndarray): Estimated poses (n_steps + 1, 3).
        pose_cov_traces (np.ndarray): Trace of the pose covariance per
            step.
        landmark_estimates (np.ndarray): Final landmark means (p, 2).
        corruption (object): The applied corruption realisation, a
            :class:`SwapAudit` or the initial landmark guesses.
        skipped_updates (int): Updates skipped on a singular innovation.
        error (str): Error text if the run failed unexpectedly.

    """

    experiment: str
    mode: str
    level: float
    seed: int
    path_rmse: float = float('nan')
    map_rmse: float = float('nan')
    diverged: bool = False
    n_steps: int = 0
    n_landmarks: int = 0
    wall_ms: float = 0.0
    pose_estimates: np.ndarray = None
    pose_cov_traces: np.ndarray = None
    landmark_estimates: np.ndarray = None
    corruption: object = None
    skipped_updates: int = 0
    error: str = ''

    def to_row(self, record_timing: bool=False) -> tuple:
        """The run as a results-CSV row.

        Args:
            record_timing (bool, optional): Write the wall time. If False
                the column is 0, keeping the file byte-identical across
                repeats. Defaults to False.

        """
        return (self.experiment, self.mode, self.level, self.seed, self.path_rmse,
                self.map_rmse, int(self.diverged), self.n_steps, self.n_landmarks,
                round(self.wall_ms, 3) if record_timing else 0)


@dataclass(frozen=True)
class Aggregate:
    """Statistics of the runs at one (level, mode).

    Standard deviations are sample standard deviations (ddof=1), and are
    zero for fewer than two runs. Statistics are over the runs which did
    not diverge.

    """

    experiment: str
    mode: str
    level: float
    n_runs: int
    n_diverged: int
    path_mean: float
    path_std: float
    map_mean: float
    map_std: float

    def to_row(self) -> tuple:
        """The aggregate as an aggregate-CSV row."""
        return dataclasses.astuple(self)


@dataclass
class SweepResult:
    """Rows and aggregates of a sweep.

    Attributes:
        experiment (str): Experiment name.
        runs (list): One :class:`RunResult` per (level, seed, mode), in
            that nesting order.
        aggregates (list): One :class:`Aggregate` per (level, mode).

    """

    experiment: str
    runs: List[RunResult] = field(default_factory=list)
    aggregates: List[Aggregate] = field(default_factory=list)


def intrinsics_of(config: ScenarioConfig) -> slam2d.CameraIntrinsics2d:
    """Camera intrinsics described by a scenario configuration."""
    return slam2d.CameraIntrinsics2d(f=config.focal_length,
                                     c=config.principal_point,
                                     image_halfwidth=config.image_halfwidth,
                                     depth_epsilon=config.depth_epsilon)


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Generate the ground truth, odometry and measurements of a scenario.

    The camera follows ``n_loops`` circuits of a circle of
    ``path_radius`` in ``n_steps`` equal steps, heading along the
    tangent. Landmarks are spread evenly on a ring of
    ``landmark_ring_radius`` with seeded radial and tangential jitter.

    Args:
        config (ScenarioConfig): Scenario configuration.

    Raises:
        DegenerateScenarioError: If no landmark is ever visible.

    Returns:
        Scenario: The generated scenario.

    """
    n, p = config.n_steps, config.n_landmarks
    intr = intrinsics_of(config)
    phi = 2.0 * np.pi * config.n_loops * np.arange(n + 1) / n
    gt_path = np.column_stack((config.path_radius * np.cos(phi),
                               config.path_radius * np.sin(phi),
                               phi))
    rng = rng_stream(config.seed, STREAM_LANDMARKS)
    jitter = rng.normal(0.0, 1.0, size=(p, 2)) * config.landmark_jitter
    ang = 2.0 * np.pi * np.arange(p) / p + jitter[:, 1] / config.landmark_ring_radius
    rad = config.landmark_ring_radius + jitter[:, 0]
    gt_landmarks = np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))
    rng = rng_stream(config.seed, STREAM_ODOMETRY)
    noise = rng.normal(0.0, 1.0, size=(n, 3)) * np.array([config.sigma_dp,
                                                          config.sigma_dp,
                                                          config.sigma_dtheta])
    inc = np.diff(gt_path, axis=0) + noise
    controls = [slam2d.OdometryControl(dp=inc[k, :2].copy(), dtheta=float(inc[k, 2]))
                for k in range(n)]
    rng = rng_stream(config.seed, STREAM_MEASUREMENT)
    clean, noisy = [], []
    for k in range(1, n + 1):
        vis = slam2d.visible_landmarks(gt_path[k], gt_landmarks, intr)
        cf = slam2d.camera_frame(gt_path[k], gt_landmarks[vis])
        vals = intr.f * cf[:, 0] / cf[:, 1] + intr.c if vis.size else np.zeros(0)
        clean.append(Frame(visible=vis, values=vals))
        noisy.append(Frame(visible=vis, values=vals + rng.normal(0.0, config.sigma_r, vis.size)))
    if not any(fr.visible.size for fr in clean):
        raise DegenerateScenarioError('No landmark is visible at any step of the scenario.')
    return Scenario(config=config,
                    intrinsics=intr,
                    gt_path=gt_path,
                    gt_landmarks=gt_landmarks,
                    controls=controls,
                    measurements=noisy,
                    noiseless_measurements=clean)


def corrupt_swaps(frames: Sequence[Frame],
                  gt_landmarks: np.ndarray,
                  rho: float,
                  rng: np.random.Generator) -> Tuple[List[Frame], SwapAudit]:
    """Swap observations between nearby visible landmarks.

    At each step, each visible landmark (in ascending order) draws a
    uniform variate. If it has not yet been swapped at this step and
    another unswapped landmark is visible, the draw is an *opportunity*
    and, with probability ``rho``, its observation is exchanged with that
    of its nearest (by ground-truth distance) unswapped visible
    neighbour.

    Args:
        frames (Sequence[Frame]): Observations per step.
        gt_landmarks (np.ndarray): Ground-truth landmarks (p, 2).
        rho (float): Swap probability in [0, 1].
        rng (np.random.Generator): Generator of the swap stream.

    Raises:
        ConfigError: If ``rho`` is outside [0, 1].

    Returns:
        tuple: The corrupted frames and a :class:`SwapAudit`.

    """
    if not 0.0 <= rho <= 1.0:
        raise ConfigError('must lie in [0, 1]', field='rho')
    out, swaps, opportunities = [], [], 0
    for step, fr in enumerate(frames, start=1):
        vals = fr.values.copy()
        vis = list(fr.visible)
        done = set()
        for a, i in enumerate(vis):
            u = rng.random()
            if a in done:
                continue
            cands = [b for b in range(len(vis)) if b != a and b not in done]
            if not cands:
                continue
            opportunities += 1
            if u < rho:
                dist = [np.linalg.norm(gt_landmarks[vis[b]] - gt_landmarks[i]) for b in cands]
                b = cands[int(np.argmin(dist))]
                vals[a], vals[b] = vals[b], vals[a]
                done.update((a, b))
                swaps.append((step, int(i), int(vis[b])))
        out.append(Frame(visible=fr.visible, values=vals))
    return out, SwapAudit(opportunities=opportunities, swaps=swaps)


def corrupt_init(gt_landmarks: np.ndarray, var: float, rng: np.random.Generator) -> np.ndarray:
    """Initial landmark guesses: ground truth plus N(0, var I) noise.

    Args:
        gt_landmarks (np.ndarray): Ground-truth landmarks (p, 2).
        var (float): Noise variance, square metres.
        rng (np.random.Generator): Generator of the init-noise stream.

    Raises:
        ConfigError: If ``var`` is negative.

    Returns:
        np.ndarray: The guesses (p, 2).

    """
    if not var >= 0:
        raise ConfigError('must be non-negative', field='init_var')
    gt = np.asarray(gt_landmarks, dtype=float)
    return gt + np.sqrt(var) * rng.normal(0.0, 1.0, size=gt.shape)


def procrustes_align(est: np.ndarray, gt: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Similarity transform mapping estimated points onto the ground truth.

    Minimises ``sum |s R est_i + t - gt_i|^2`` over scale, rotation (no
    reflection) and translation, in closed form from the SVD of the
    centred cross-covariance.

    Args:
        est (np.ndarray): Estimated points (n, 2).
        gt (np.ndarray): Ground-truth points (n, 2).

    Raises:
        DegenerateAlignmentError: If fewer than two points are given, the
            shapes differ, or either set is coincident.

    Returns:
        tuple: ``(s, R, t)`` with ``det(R) = +1``.

    """
    est = np.asarray(est, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if est.shape != gt.shape or est.ndim != 2 or est.shape[0] < 2:
        raise DegenerateAlignmentError('Alignment needs two equal-sized sets of at least two '
                                       'points.')
    mu_e, mu_g = est.mean(axis=0), gt.mean(axis=0)
    E, G = est - mu_e, gt - mu_g
    var_e = np.mean(np.sum(E**2, axis=1))
    var_g = np.mean(np.sum(G**2, axis=1))
    if var_e <= 1e-300 or var_g <= 1e-300 or not np.isfinite(var_e):
        raise DegenerateAlignmentError('Cannot align a coincident point set.')
    C = G.T @ E / est.shape[0]
    U, D, Vt = np.linalg.svd(C)
    S = np.eye(est.shape[1])
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[-1, -1] = -1.0
    R = U @ S @ Vt
    s = float(np.trace(np.diag(D) @ S) / var_e)
    t = mu_g - s * R @ mu_e
    return s, R, t


def apply_similarity(points: np.ndarray, s: float, R: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Apply ``x -> s R x + t`` to points (n, 2)."""
    return s * np.asarray(points, dtype=float) @ R.T + t


def scene_diameter(gt_landmarks: np.ndarray) -> float:
    """Largest pairwise distance between ground-truth landmarks."""
    pts = np.asarray(gt_landmarks, dtype=float)
    return float(pdist(pts).max()) if len(pts) > 1 else 0.0


def rmse_normalized(aligned: np.ndarray, gt: np.ndarray, normalizer: float) -> float:
    """Root-mean-square point error divided by a normaliser.

    Args:
        aligned (np.ndarray): Aligned points (n, 2).
        gt (np.ndarray): Ground-truth points (n, 2).
        normalizer (float): Scale, typically :func:`scene_diameter`.

    Raises:
        DegenerateAlignmentError: If the counts differ or the normaliser
            is not positive.

    Returns:
        float: ``sqrt(mean |aligned_i - gt_i|^2) / normalizer``.

    """
    aligned = np.asarray(aligned, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if aligned.shape != gt.shape:
        raise DegenerateAlignmentError('Point counts differ.')
    if not normalizer > 0:
        raise DegenerateAlignmentError('The RMSE normaliser must be positive.')
    return float(np.sqrt(np.mean(np.sum((aligned - gt)**2, axis=-1))) / normalizer)


def _update(state: GaussianState,
            layout: slam2d.Slam2dState,
            frame: Frame,
            intr: slam2d.CameraIntrinsics2d,
            sigma_r: float,
            mode: str,
            strategy: str,
            k: int) -> Tuple[GaussianState, int]:
    """Apply the frame's measurements; returns the state and skip count."""
    update = UPDATERS[mode]
    skipped = 0
    if strategy == 'sequential':
        batches = [([i], [v]) for i, v in zip(frame.visible, frame.values)]
    else:
        batches = [(frame.visible, frame.values)]
    for idx, vals in batches:
        model = slam2d.stacked_measurement_model(layout, idx, intr, sigma_r)
        try:
            state, _ = update(state, model, np.asarray(vals, dtype=float), k)
        except SingularInnovationError:
            skipped += 1
    return state, skipped


def run_slam(scenario: Scenario,
             corruption: CorruptionSpec,
             filter_mode: str,
             options: FilterOptions=FilterOptions(),
             experiment: str='single',
             level: float=None,
             keep_trajectory: bool=True) -> RunResult:
    """Filter a scenario with the EKF or the UKF and score the result.

    The pose is anchored at the ground-truth start; the landmarks start
    at the ground truth, or at :func:`corrupt_init` guesses for the
    init-noise variant, with covariance ``prior_std^2 I``. Each step
    applies the (exact, linear) Kalman prediction with the odometry,
    then the EKF or UKF update with the visible projections, which are
    swap-corrupted for the swap variant.

    Divergence (a non-finite state, an exhausted jitter schedule, or a
    degenerate alignment) is recorded in the result rather than raised.

    Args:
        scenario (Scenario): Generated scenario.
        corruption (CorruptionSpec): Corruption protocol.
        filter_mode (str): 'EKF' or 'UKF'.
        options (FilterOptions, optional): Filter options.
        experiment (str, optional): Experiment name for reporting.
            Defaults to 'single'.
        level (float, optional): Corruption level for reporting. Defaults
            to the level of the corruption variant.
        keep_trajectory (bool, optional): Keep the per-step estimates in
            the result. Defaults to True.

    Returns:
        RunResult: The run outcome.

    """
    # pylint: disable=too-many-locals
    t0 = time.perf_counter()
    cfg = scenario.config
    mode = filter_mode.upper()
    if level is None:
        level = {'swap': corruption.rho, 'init_noise': corruption.init_var}.get(corruption.variant,
                                                                               0.0)
    gt_lms = scenario.gt_landmarks
    res = RunResult(experiment=experiment, mode=mode, level=float(level), seed=cfg.seed,
                    n_steps=cfg.n_steps, n_landmarks=cfg.n_landmarks)
    frames = scenario.measurements
    guesses = gt_lms.copy()
    if corruption.variant == 'swap':
        frames, res.corruption = corrupt_swaps(frames, gt_lms, corruption.rho,
                                               rng_stream(cfg.seed, STREAM_SWAP))
    elif corruption.variant == 'init_noise':
        guesses = corrupt_init(gt_lms, corruption.init_var, rng_stream(cfg.seed, STREAM_INIT))
        res.corruption = guesses
    layout = slam2d.Slam2dState(cfg.n_landmarks)
    intr = scenario.intrinsics
    state = slam2d.initial_state(scenario.gt_path[0], guesses,
                                 pose_cov=options.pose_cov,
                                 prior_std=cfg.prior_std)
    Q_pose = np.diag([cfg.sigma_dp**2, cfg.sigma_dp**2, cfg.sigma_dtheta**2])
    poses = np.full((cfg.n_steps + 1, 3), np.nan)
    traces = np.full(cfg.n_steps + 1, np.nan)
    poses[0], traces[0] = state.mean[:3], np.trace(state.cov[:3, :3])
    try:
        for k in range(1, cfg.n_steps + 1):
            dyn = slam2d.slam_dynamics_model(scenario.controls[k - 1], Q_pose, layout)
            state = ekf_predict(state, dyn, k)
            frame = frames[k - 1]
            if frame.visible.size:
                state, skipped = _update(state, layout, frame, intr, cfg.sigma_r, mode,
                                         options.update_strategy, k)
                res.skipped_updates += skipped
            if not state.is_finite():
                raise NumericError(f'Non-finite state at step {k}.', index=k)
            # Both modes must keep a factorisable covariance.
            cholesky_sqrt(state.cov)
            poses[k], traces[k] = state.mean[:3], np.trace(state.cov[:3, :3])
        est_lms = layout.landmarks(state.mean)
        res.landmark_estimates = est_lms.copy()
        s, R, t = procrustes_align(est_lms, gt_lms)
        diam = scene_diameter(gt_lms)
        res.map_rmse = rmse_normalized(apply_similarity(est_lms, s, R, t), gt_lms, diam)
        res.path_rmse = rmse_normalized(apply_similarity(poses[:, :2], s, R, t),
                                        scenario.gt_path[:, :2], diam)
    except (NumericError, NonPsdCovarianceError, DegenerateAlignmentError) as err:
        res.diverged = True
        res.path_rmse = res.map_rmse = float('nan')
        res.error = str(err)
        reporter.debug(f'[{mode}] seed {cfg.seed}, level {level}: diverged ({err})')
    if keep_trajectory:
        res.pose_estimates = poses
        res.pose_cov_traces = traces
    res.wall_ms = (time.perf_counter() - t0) * 1e3
    return res


@dataclass(frozen=True)
class SweepJob:
    """One (level, seed, mode) run of a sweep."""

    experiment: str
    level: float
    seed: int
    mode: str
    scenario: ScenarioConfig
    options: FilterOptions
    keep_trajectory: bool = False


def corruption_for(experiment: str, level: float) -> CorruptionSpec:
    """Corruption protocol of an experiment at a level."""
    if experiment == 'swap':
        return CorruptionSpec(variant='swap', rho=level)
    if experiment == 'init_noise':
        return CorruptionSpec(variant='init_noise', init_var=level)
    return CorruptionSpec()


def run_job(job: SweepJob) -> RunResult:
    """Execute one sweep job; failures are recorded, never raised.

    Args:
        job (SweepJob): The job.

    Returns:
        RunResult: The run outcome. An unexpected exception yields a
        diverged result carrying the error text.

    """
    try:
        scn = generate_scenario(dataclasses.replace(job.scenario, seed=job.seed))
        return run_slam(scn, corruption_for(job.experiment, job.level), job.mode,
                        options=job.options, experiment=job.experiment, level=job.level,
                        keep_trajectory=job.keep_trajectory)
    except Exception as err:
        reporter.debug(traceback.format_exc())
        return RunResult(experiment=job.experiment, mode=job.mode, level=float(job.level),
                         seed=job.seed, diverged=True, n_steps=job.scenario.n_steps,
                         n_landmarks=job.scenario.n_landmarks, error=repr(err))


def _stats(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation of finite values."""
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if not v.size:
        return float('nan'), float('nan')
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def aggregate(runs: Sequence[RunResult]) -> List[Aggregate]:
    """Per-(level, mode) statistics of a run set.

    Args:
        runs (Sequence[RunResult]): Runs of one experiment.

    Returns:
        list: One :class:`Aggregate` per (level, mode), ordered by level
        then by first appearance of the mode.

    """
    groups = {}
    for r in runs:
        groups.setdefault((r.level, r.mode), []).append(r)
    out = []
    for (level, mode) in sorted(groups, key=lambda lm: (lm[0], _mode_order(runs, lm[1]))):
        g = groups[(level, mode)]
        ok = [r for r in g if not r.diverged]
        pm, ps = _stats([r.path_rmse for r in ok])
        mm, ms = _stats([r.map_rmse for r in ok])
        out.append(Aggregate(experiment=g[0].experiment, mode=mode, level=level,
                             n_runs=len(g), n_diverged=len(g) - len(ok),
                             path_mean=pm, path_std=ps, map_mean=mm, map_std=ms))
    return out


def _mode_order(runs: Sequence[RunResult], mode: str) -> int:
    """Position of the first run of a mode."""
    return next(i for i, r in enumerate(runs) if r.mode == mode)


def moving_statistics(levels: Sequence[float],
                      values: Sequence[float],
                      window: int=5) -> List[Tuple[float, float, float]]:
    """Centred moving mean and standard deviation over sorted levels.

    For each distinct level, the statistics are taken over all values
    whose level lies within ``window // 2`` distinct levels of it.
    Non-finite values are ignored.

    Args:
        levels (Sequence[float]): Level of each value.
        values (Sequence[float]): Values, e.g. per-run path RMSE.
        window (int, optional): Window width in distinct levels.
            Defaults to 5.

    Returns:
        list: ``(level, mean, std)`` per distinct level, ascending.

    """
    levels = np.asarray(levels, dtype=float)
    values = np.asarray(values, dtype=float)
    distinct = np.unique(levels)
    half = max(int(window), 1) // 2
    out = []
    for j, lv in enumerate(distinct):
        lo, hi = distinct[max(j - half, 0)], distinct[min(j + half, len(distinct) - 1)]
        m, s = _stats(values[(levels >= lo) & (levels <= hi)])
        out.append((float(lv), m, s))
    return out


def moving_rows(runs: Sequence[RunResult], window: int=5) -> list:
    """Moving statistics of path and map RMSE, one row per (mode, level)."""
    rows = []
    for mode in dict.fromkeys(r.mode for r in runs):
        sub = [r for r in runs if r.mode == mode and not r.diverged]
        lv = [r.level for r in sub]
        path = moving_statistics(lv, [r.path_rmse for r in sub], window)
        mapm = moving_statistics(lv, [r.map_rmse for r in sub], window)
        rows.extend((mode, p[0], p[1], p[2], m[1], m[2]) for p, m in zip(path, mapm))
    return rows


def sweep(scenario: ScenarioConfig,
          experiment: str,
          levels: Sequence[float],
          seeds: Sequence[int],
          modes: Sequence[str]=('EKF', 'UKF'),
          options: FilterOptions=FilterOptions(),
          parallelism: int=1,
          keep_trajectories: bool=False) -> SweepResult:
    """Run every (level, seed, mode) combination of an experiment.

    Runs are independent and may execute in parallel; results are
    returned in (level, seed, mode) order regardless of the schedule.
    A failing run is recorded as diverged and never aborts the sweep.

    Args:
        scenario (ScenarioConfig): Base scenario; its seed is replaced
            by each sweep seed.
        experiment (str): 'swap' or 'init_noise'.
        levels (Sequence[float]): Corruption levels.
        seeds (Sequence[int]): Scenario seeds.
        modes (Sequence[str], optional): Filter modes.
            Defaults to ('EKF', 'UKF').
        options (FilterOptions, optional): Filter options.
        parallelism (int, optional): Worker processes; 0 uses all cores.
            Defaults to 1 (serial).
        keep_trajectories (bool, optional): Keep per-step estimates.
            Defaults to False.

    Raises:
        ConfigError: If the grid, the seed list or the mode list is
            empty.

    Returns:
        SweepResult: Runs and aggregates.

    """
    if not len(levels) or not len(seeds) or not len(modes):
        raise ConfigError('levels, seeds and modes must all be non-empty', field='sweep')
    jobs = [SweepJob(experiment=experiment, level=float(lv), seed=int(sd), mode=m.upper(),
                     scenario=scenario, options=options, keep_trajectory=keep_trajectories)
            for lv in levels for sd in seeds for m in modes]
    workers = parallelism or os.cpu_count() or 1
    reporter.info(f'Running the \'{experiment}\' sweep: {len(levels)} levels x {len(seeds)} '
                  f'seeds x {len(modes)} modes = {len(jobs)} runs on {workers} worker(s) ...')
    if workers == 1:
        runs = [run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    for r in runs:
        reporter.debug(f'[{r.mode}] level {r.level:g}, seed {r.seed}: path {r.path_rmse:.4g}, '
                       f'map {r.map_rmse:.4g}, diverged {r.diverged}, {r.wall_ms:.0f} ms')
    n_div = sum(r.diverged for r in runs)
    if n_div:
        reporter.info(f'{n_div} of {len(runs)} runs diverged.')
    return SweepResult(experiment=experiment, runs=runs, aggregates=aggregate(runs))


def write_rows_csv(path: str, columns: Sequence[str], rows: Sequence[Sequence]):
    """Write rows under a header, with Unix line endings."""
    with open(path, 'w', newline='', encoding='utf-8') as f:
        w = csv.writer(f, lineterminator='\n')
        w.writerow(columns)
        w.writerows(rows)


def write_results_csv(path: str, runs: Sequence[RunResult], record_timing: bool=False):
    """Write one results row per run."""
    write_rows_csv(path, RESULTS_COLUMNS, [r.to_row(record_timing) for r in runs])


def write_aggregate_csv(path: str, aggregates: Sequence[Aggregate]):
    """Write one aggregate row per (level, mode)."""
    write_rows_csv(path, AGGREGATE_COLUMNS, [a.to_row() for a in aggregates])


def write_moving_csv(path: str, runs: Sequence[RunResult], window: int=5):
    """Write the moving statistics of a run set."""
    write_rows_csv(path, MOVING_COLUMNS, moving_rows(runs, window))


def trajectory_rows(result: RunResult, gt_path: np.ndarray) -> list:
    """Per-step ground truth, estimate and pose covariance trace."""
    est = result.pose_estimates
    tr = result.pose_cov_traces
    return [(k, *gt_path[k], *est[k], tr[k]) for k in range(len(gt_path))]


def write_trajectory_csv(path: str, result: RunResult, gt_path: np.ndarray):
    """Write the trajectory dump of a run."""
    write_rows_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(result, gt_path))


def trajectory_filename(result: RunResult) -> str:
    """File name of a run's trajectory dump."""
    return f'traj_{result.experiment}_{result.mode}_{result.level:g}_{result.seed}.csv'
