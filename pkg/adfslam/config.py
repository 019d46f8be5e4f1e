#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the configuration types for the
            simulation, the corruption protocols, the filters, the sweeps
            and the IMU check, and the JSON configuration loader.

            A configuration file is a JSON object. Keys may be given
            *flat*::

                {"n_steps": 197, "rho": 0.1, "seeds": [1, 2, 3]}

            or *grouped* by section::

                {"scenario": {"n_steps": 197},
                 "corruption": {"rho": 0.1},
                 "sweep": {"seeds": [1, 2, 3]}}

            Overrides (``key=value``, or ``section.key=value``) are
            applied after the file, and values are parsed as JSON
            literals where possible. Every field not given explicitly
            keeps its default, and is listed in
            :attr:`RunConfig.defaulted` so it can be reported.

            The full schema is documented on the *Configuration* page of
            the documentation.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Load a configuration with an override::

        >>> from adfslam.config import load_config
        >>> cfg = load_config('config.json', overrides=['n_steps=10'])
        >>> cfg.scenario.n_steps
        10

"""

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Sequence, Tuple
# locals
from .errors import ConfigError

SWAP_LEVELS = tuple(round(0.01 * i, 2) for i in range(16))
INIT_NOISE_LEVELS = (0.0, 0.25, 1.0, 4.0, 9.0, 16.0)
FILTER_MODES = ('EKF', 'UKF')
UPDATE_STRATEGIES = ('stacked', 'sequential')
CORRUPTION_VARIANTS = ('none', 'swap', 'init_noise')


@dataclass(frozen=True)
class ScenarioConfig:
    """Definition of a simulated SLAM scenario.

    Attributes:
        n_steps (int): Number of time steps.
        n_landmarks (int): Number of landmarks.
        n_loops (int): Number of circuits of the path.
        path_radius (float): Radius of the camera path, metres.
        landmark_ring_radius (float): Radius of the landmark ring,
            metres.
        landmark_jitter (float): Standard deviation of the deterministic
            radial and tangential landmark jitter, metres.
        sigma_dp (float): Odometry translation noise std, metres.
        sigma_dtheta (float): Odometry heading noise std, radians.
        sigma_r (float): Measurement noise std, normalised image units.
        prior_std (float): Landmark prior std, metres.
        focal_length (float): Camera focal length.
        principal_point (float): Camera principal point.
        image_halfwidth (float): Visible image half-width.
        depth_epsilon (float): Minimum landmark depth, metres.
        seed (int): Scenario seed.

    """

    n_steps: int = 197
    n_landmarks: int = 20
    n_loops: int = 2
    path_radius: float = 10.0
    landmark_ring_radius: float = 20.0
    landmark_jitter: float = 1.0
    sigma_dp: float = 0.02
    sigma_dtheta: float = 0.007
    sigma_r: float = 0.02
    prior_std: float = 4.0
    focal_length: float = 1.5
    principal_point: float = 0.0
    image_halfwidth: float = 1.0
    depth_epsilon: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class CorruptionSpec:
    """Corruption protocol applied to a run.

    Attributes:
        variant (str): 'none', 'swap' or 'init_noise'.
        rho (float): Swap probability per visible landmark and step.
        init_var (float): Variance of the landmark initialisation noise,
            square metres.

    """

    variant: str = 'none'
    rho: float = 0.0
    init_var: float = 0.0


@dataclass(frozen=True)
class FilterOptions:
    """Filter options shared by both modes.

    Attributes:
        update_strategy (str): 'stacked' (one update per frame) or
            'sequential' (one update per landmark).
        pose_cov (tuple): Diagonal of the initial pose covariance.

    """

    update_strategy: str = 'stacked'
    pose_cov: Tuple[float, float, float] = (1e-4, 1e-4, 1e-6)


@dataclass(frozen=True)
class SweepOptions:
    """Sweep and output options.

    Attributes:
        seeds (tuple): Seeds of the runs at each level.
        swap_levels (tuple): Swap probabilities of the swap sweep.
        init_noise_levels (tuple): Variances of the init-noise sweep.
        modes (tuple): Filter modes to run.
        parallelism (int): Worker count; 0 uses all available cores.
        moving_window (int): Window (levels) of the moving statistics.
        dump_trajectories (bool): Write a trajectory CSV per run.
        record_timing (bool): Write the wall time of each run to the
            results CSV. When False the column is 0, so repeated sweeps
            produce byte-identical files.

    """

    seeds: Tuple[int, ...] = tuple(range(20))
    swap_levels: Tuple[float, ...] = SWAP_LEVELS
    init_noise_levels: Tuple[float, ...] = INIT_NOISE_LEVELS
    modes: Tuple[str, ...] = FILTER_MODES
    parallelism: int = 0
    moving_window: int = 5
    dump_trajectories: bool = False
    record_timing: bool = False


@dataclass(frozen=True)
class ImuOptions:
    """Options of the IMU propagation check.

    Attributes:
        acc_noise (float): Accelerometer noise density, m/s^2/sqrt(Hz).
        gyro_noise (float): Gyroscope noise density, rad/s/sqrt(Hz).
        gravity (tuple): World-frame gravity, m/s^2.
        modes (tuple): Prediction modes to run.

    """

    acc_noise: float = 2e-3
    gyro_noise: float = 1.7e-4
    gravity: Tuple[float, float, float] = (0.0, 0.0, 9.81)
    modes: Tuple[str, ...] = FILTER_MODES


@dataclass(frozen=True)
class RunConfig:
    """Complete, validated configuration.

    Attributes:
        scenario (ScenarioConfig): Scenario definition.
        corruption (CorruptionSpec): Corruption protocol.
        filter (FilterOptions): Filter options.
        sweep (SweepOptions): Sweep options.
        imu (ImuOptions): IMU check options.
        defaulted (tuple): Qualified names (``section.field``) of the
            fields which were not given explicitly.

    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    corruption: CorruptionSpec = field(default_factory=CorruptionSpec)
    filter: FilterOptions = field(default_factory=FilterOptions)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    imu: ImuOptions = field(default_factory=ImuOptions)
    defaulted: Tuple[str, ...] = ()

    def describe(self) -> list:
        """Every effective parameter as ``(name, value, defaulted)``."""
        out = []
        for section in _SECTIONS:
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                name = f'{section}.{f.name}'
                out.append((name, getattr(obj, f.name), name in self.defaulted))
        return out


_SECTIONS = {'scenario': ScenarioConfig,
             'corruption': CorruptionSpec,
             'filter': FilterOptions,
             'sweep': SweepOptions,
             'imu': ImuOptions}
_TUPLE_FIELDS = {'pose_cov', 'seeds', 'swap_levels', 'init_noise_levels', 'modes', 'gravity'}


def _field_index() -> dict:
    """Map each flat field name to its section.

    ``modes`` appears in two sections; a flat ``modes`` key applies to
    the sweep, and ``imu.modes`` must be qualified.

    """
    index = {}
    for section, cls in _SECTIONS.items():
        for f in dataclasses.fields(cls):
            index.setdefault(f.name, section)
    return index


def _parse_value(text: str):
    """Parse an override value as a JSON literal, else keep the string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _coerce(name: str, value, default, qualified: str=None):
    """Coerce a raw value to the type of its default."""
    # pylint: disable=too-many-return-statements
    try:
        if name in _TUPLE_FIELDS:
            if isinstance(value, str):
                value = [_parse_value(v.strip()) for v in value.split(',') if v.strip()]
            if not isinstance(value, (list, tuple)):
                value = [value]
            item = type(default[0]) if default else float
            if name == 'modes':
                return tuple(str(v).upper() for v in value)
            return tuple(item(v) for v in value)
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ('1', 'true', 'yes', 'on')
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError('an integer is required')
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f'invalid value {value!r} ({err})', field=qualified or name) from err


def _validate(cfg: RunConfig):
    """Check every field range, raising on the first violation."""
    # pylint: disable=too-many-branches
    s, c, f, w, i = cfg.scenario, cfg.corruption, cfg.filter, cfg.sweep, cfg.imu
    for name in ('n_steps', 'n_landmarks', 'n_loops'):
        if getattr(s, name) < 1:
            raise ConfigError('must be a positive integer', field=f'scenario.{name}')
    for name in ('path_radius', 'landmark_ring_radius', 'focal_length', 'image_halfwidth',
                 'depth_epsilon', 'sigma_r'):
        if not getattr(s, name) > 0:
            raise ConfigError('must be positive', field=f'scenario.{name}')
    for name in ('landmark_jitter', 'sigma_dp', 'sigma_dtheta', 'prior_std'):
        if not getattr(s, name) >= 0:
            raise ConfigError('must be non-negative', field=f'scenario.{name}')
    if c.variant not in CORRUPTION_VARIANTS:
        raise ConfigError(f'must be one of {CORRUPTION_VARIANTS}', field='corruption.variant')
    if not 0.0 <= c.rho <= 1.0:
        raise ConfigError('must lie in [0, 1]', field='corruption.rho')
    if not c.init_var >= 0:
        raise ConfigError('must be non-negative', field='corruption.init_var')
    if f.update_strategy not in UPDATE_STRATEGIES:
        raise ConfigError(f'must be one of {UPDATE_STRATEGIES}', field='filter.update_strategy')
    if len(f.pose_cov) != 3 or min(f.pose_cov) <= 0:
        raise ConfigError('must be three positive variances', field='filter.pose_cov')
    if not w.seeds:
        raise ConfigError('at least one seed is required', field='sweep.seeds')
    if not w.swap_levels or not all(0.0 <= v <= 1.0 for v in w.swap_levels):
        raise ConfigError('levels must lie in [0, 1]', field='sweep.swap_levels')
    if not w.init_noise_levels or min(w.init_noise_levels) < 0:
        raise ConfigError('levels must be non-negative', field='sweep.init_noise_levels')
    for sect, modes in (('sweep', w.modes), ('imu', i.modes)):
        if not modes or not set(modes).issubset(FILTER_MODES):
            raise ConfigError(f'must be a subset of {FILTER_MODES}', field=f'{sect}.modes')
    if w.parallelism < 0:
        raise ConfigError('must be non-negative', field='sweep.parallelism')
    if w.moving_window < 1:
        raise ConfigError('must be a positive integer', field='sweep.moving_window')
    if i.acc_noise < 0 or i.gyro_noise < 0:
        raise ConfigError('noise densities must be non-negative', field='imu')
    if len(i.gravity) != 3:
        raise ConfigError('must be a 3-vector', field='imu.gravity')


def build_config(raw: dict=None, overrides: Sequence[str]=()) -> RunConfig:
    """Build a validated configuration from a dict and overrides.

    Args:
        raw (dict, optional): Parsed JSON object, flat or grouped.
            Defaults to an empty object.
        overrides (Sequence[str], optional): ``key=value`` strings.
            Defaults to ().

    Raises:
        ConfigError: If a key is unknown, a value cannot be coerced or a
            range check fails.

    Returns:
        RunConfig: The validated configuration.

    """
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError('the configuration must be a JSON object')
    index = _field_index()
    given = {section: {} for section in _SECTIONS}

    def _put(key: str, value):
        section, _, name = key.rpartition('.')
        section = section or index.get(name)
        if section not in _SECTIONS or name not in {f.name for f in
                                                    dataclasses.fields(_SECTIONS[section])}:
            raise ConfigError('unknown configuration key', field=key)
        given[section][name] = value

    for key, value in raw.items():
        if key in _SECTIONS and isinstance(value, dict):
            for k, v in value.items():
                _put(f'{key}.{k}', v)
        else:
            _put(key, value)
    for item in overrides or ():
        key, sep, text = item.partition('=')
        if not sep or not key.strip():
            raise ConfigError(f'override {item!r} is not of the form key=value')
        _put(key.strip(), _parse_value(text.strip()))
    sections, defaulted = {}, []
    for section, cls in _SECTIONS.items():
        kwargs = {}
        for f in dataclasses.fields(cls):
            default = getattr(cls(), f.name)
            if f.name in given[section]:
                kwargs[f.name] = _coerce(f.name, given[section][f.name], default,
                                         qualified=f'{section}.{f.name}')
            else:
                defaulted.append(f'{section}.{f.name}')
        sections[section] = cls(**kwargs)
    cfg = RunConfig(**sections, defaulted=tuple(defaulted))
    _validate(cfg)
    return cfg


def load_config(path: str=None, overrides: Sequence[str]=()) -> RunConfig:
    """Load, override and validate a JSON configuration file.

    Args:
        path (str, optional): Path to the JSON file. If None, the
            defaults are used. Defaults to None.
        overrides (Sequence[str], optional): ``key=value`` overrides.
            Defaults to ().

    Raises:
        ConfigError: If the file cannot be read or parsed, or any field
            is invalid.

    Returns:
        RunConfig: The validated configuration.

    """
    raw = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f'file not found: {path}', field='config')
        try:
            with open(path, encoding='utf-8') as f:
                raw = json.load(f)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f'cannot parse {path}: {err}', field='config') from err
    return build_config(raw, overrides)
