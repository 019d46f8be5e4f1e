#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the command-line front end.

            Commands:

                - ``run-slam``: Filter one scenario with each mode under
                  the configured corruption.
                - ``sweep-swap``: Sweep the swap probability over the
                  configured grid and seeds.
                - ``sweep-init-noise``: Sweep the landmark initialisation
                  variance over the configured grid and seeds.
                - ``imu-check``: Propagate a VIO state through an IMU CSV
                  file with each prediction mode.
                - ``selftest``: Run the embedded invariant suite.

            Exit codes:

                - 0: Success (individual run divergences included).
                - 1: A self-test property failed.
                - 2: Configuration or input format error.
                - 3: I/O error.

            Every effective parameter is reported before the first run;
            the verbosity is set by the ``ADF_SLAM_LOG`` environment
            variable (``error``, ``info`` or ``debug``).

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Run the swap sweep on five seeds, serially::

        $ python -m adfslam sweep-swap --out ./results --seeds 5 --parallelism 1

    Run the init-noise sweep with an override::

        $ adfslam sweep-init-noise --config cfg.json --set n_steps=100

"""

import argparse
import dataclasses
import json
import os
import sys
from typing import List, Sequence
import numpy as np
# locals
from . import benchmark, imu
from ._version import __version__
from .config import RunConfig, load_config as _load_config
from .errors import ConfigError, ImuFormatError
from .reporter import reporter
from .selftest import SelfTest

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_IO = 3

COMMANDS = ('run-slam', 'sweep-swap', 'sweep-init-noise', 'imu-check', 'selftest')
IMU_REPORT_COLUMNS = ('step', 'px', 'py', 'pz', 'vx', 'vy', 'vz', 'qw', 'qx', 'qy', 'qz',
                      'q_norm', 'cov_trace', 'min_eig')


def parse_seeds(text: str) -> List[int]:
    """Parse the ``--seeds`` argument.

    A bare integer ``N`` selects the seeds ``0 .. N-1``; a comma
    separated or JSON list selects those seeds explicitly (``7,`` is the
    single seed 7).

    Args:
        text (str): Argument text.

    Raises:
        ConfigError: If the text cannot be parsed, or selects no seed.

    Returns:
        list: The seeds.

    """
    text = text.strip()
    try:
        if text.startswith('['):
            seeds = [int(s) for s in json.loads(text)]
        elif ',' in text:
            seeds = [int(s) for s in text.split(',') if s.strip()]
        else:
            seeds = list(range(int(text)))
    except (TypeError, ValueError) as err:
        raise ConfigError(f'cannot parse {text!r} ({err})', field='seeds') from err
    if not seeds or min(seeds) < 0:
        raise ConfigError('at least one non-negative seed is required', field='seeds')
    return seeds


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, metavar='PATH',
                        help='JSON configuration file. Defaults are used if omitted.')
    common.add_argument('--out', default='.', metavar='DIR',
                        help='Output directory, created if needed. (default: %(default)s)')
    common.add_argument('--seeds', default=None, metavar='N|LIST',
                        help='Seed count N (seeds 0..N-1), or a comma separated list.')
    common.add_argument('--parallelism', type=int, default=None, metavar='N',
                        help='Worker processes; 0 uses all cores, 1 runs serially.')
    common.add_argument('--set', dest='overrides', action='append', default=[],
                        metavar='KEY=VALUE',
                        help='Override a configuration field. May be repeated.')
    common.add_argument('--dump-trajectories', action='store_true',
                        help='Write a trajectory CSV per run.')
    parser = argparse.ArgumentParser(prog='adfslam',
                                     description=('Assumed-density and linearisation '
                                                  'filtering workbench for 2D SLAM and IMU '
                                                  'propagation.'))
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True
    sub.add_parser('run-slam', parents=[common],
                   help='Filter one scenario with each mode.')
    sub.add_parser('sweep-swap', parents=[common],
                   help='Sweep the feature misassignment probability.')
    sub.add_parser('sweep-init-noise', parents=[common],
                   help='Sweep the landmark initialisation noise variance.')
    imu_p = sub.add_parser('imu-check', parents=[common],
                           help='Propagate a VIO state through an IMU CSV file.')
    imu_p.add_argument('imu_csv', metavar='IMU_CSV',
                       help='IMU file with the columns t_ns,wx,wy,wz,ax,ay,az.')
    st = sub.add_parser('selftest', help='Run the embedded invariant suite.')
    st.add_argument('--seed', type=int, default=0, help='Seed of the random inputs.')
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Load the configuration for a command and report every parameter.

    The command-line flags are applied after the file and the ``--set``
    overrides.

    Args:
        args (argparse.Namespace): Parsed arguments.

    Raises:
        ConfigError: If the file or any value is invalid.

    Returns:
        RunConfig: The validated configuration.

    """
    overrides = list(args.overrides)
    if args.seeds is not None:
        overrides.append(f'sweep.seeds={json.dumps(parse_seeds(args.seeds))}')
    if args.parallelism is not None:
        overrides.append(f'sweep.parallelism={args.parallelism}')
    if args.dump_trajectories:
        overrides.append('sweep.dump_trajectories=true')
    cfg = _load_config(args.config, overrides)
    reporter.info(f'Configuration ({args.config or "defaults"}):')
    for name, value, defaulted in cfg.describe():
        reporter.info(f'  {name:<28} = {value}{"  (default)" if defaulted else ""}')
    return cfg


def prepare_output(path: str) -> str:
    """Create the output directory and check it is writable.

    Raises:
        OSError: If the directory cannot be created or written.

    """
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f'Output directory is not writable: {path}')
    return path


def _dump_trajectories(cfg: RunConfig, runs: Sequence[benchmark.RunResult], out: str):
    """Write the trajectory CSV of each run."""
    gt = {}
    for r in runs:
        if r.pose_estimates is None:
            continue
        if r.seed not in gt:
            scn = dataclasses.replace(cfg.scenario, seed=r.seed)
            gt[r.seed] = benchmark.generate_scenario(scn).gt_path
        benchmark.write_trajectory_csv(os.path.join(out, benchmark.trajectory_filename(r)),
                                       r, gt[r.seed])


def _sweep(cfg: RunConfig, out: str, experiment: str, levels: Sequence[float]) -> int:
    """Run a sweep and write its CSV files."""
    w = cfg.sweep
    res = benchmark.sweep(cfg.scenario, experiment, levels, w.seeds, modes=w.modes,
                          options=cfg.filter, parallelism=w.parallelism,
                          keep_trajectories=w.dump_trajectories)
    stem = os.path.join(out, f'sweep_{experiment}')
    benchmark.write_results_csv(f'{stem}_results.csv', res.runs, record_timing=w.record_timing)
    benchmark.write_aggregate_csv(f'{stem}_aggregate.csv', res.aggregates)
    if experiment == 'swap':
        benchmark.write_moving_csv(f'{stem}_moving.csv', res.runs, window=w.moving_window)
    if w.dump_trajectories:
        _dump_trajectories(cfg, res.runs, out)
    for a in res.aggregates:
        reporter.info(f'[{a.mode}] level {a.level:<6g} path {a.path_mean:.4f} +/- '
                      f'{a.path_std:.4f}  map {a.map_mean:.4f} +/- {a.map_std:.4f}  '
                      f'diverged {a.n_diverged}/{a.n_runs}')
    reporter.info(f'Results written to: {stem}_*.csv')
    return EXIT_OK


def cmd_sweep_swap(cfg: RunConfig, out: str) -> int:
    """Run the feature misassignment sweep.

    Args:
        cfg (RunConfig): Configuration.
        out (str): Output directory.

    Returns:
        int: Exit code.

    """
    return _sweep(cfg, out, 'swap', cfg.sweep.swap_levels)


def cmd_sweep_init_noise(cfg: RunConfig, out: str) -> int:
    """Run the landmark initialisation noise sweep.

    Args:
        cfg (RunConfig): Configuration.
        out (str): Output directory.

    Returns:
        int: Exit code.

    """
    return _sweep(cfg, out, 'init_noise', cfg.sweep.init_noise_levels)


def cmd_run_slam(cfg: RunConfig, out: str) -> int:
    """Filter the configured scenario once per mode.

    Args:
        cfg (RunConfig): Configuration.
        out (str): Output directory.

    Returns:
        int: Exit code.

    """
    scn = benchmark.generate_scenario(cfg.scenario)
    runs = [benchmark.run_slam(scn, cfg.corruption, mode, options=cfg.filter,
                               experiment='single')
            for mode in cfg.sweep.modes]
    for r in runs:
        reporter.info(f'[{r.mode}] path {r.path_rmse:.4f}  map {r.map_rmse:.4f}  '
                      f'diverged {r.diverged}  skipped updates {r.skipped_updates}  '
                      f'{r.wall_ms:.0f} ms')
    path = os.path.join(out, 'run_slam_results.csv')
    benchmark.write_results_csv(path, runs, record_timing=cfg.sweep.record_timing)
    if cfg.sweep.dump_trajectories:
        for r in runs:
            benchmark.write_trajectory_csv(os.path.join(out, benchmark.trajectory_filename(r)),
                                           r, scn.gt_path)
    reporter.info(f'Results written to: {path}')
    return EXIT_OK


def cmd_imu_check(cfg: RunConfig, imu_csv_path: str, out: str) -> int:
    """Propagate a VIO state through an IMU file with each mode.

    A divergence is reported, not treated as a failure.

    Args:
        cfg (RunConfig): Configuration.
        imu_csv_path (str): IMU CSV file.
        out (str): Output directory.

    Raises:
        ImuFormatError: If the file is malformed.

    Returns:
        int: Exit code.

    """
    samples = imu.read_imu_csv(imu_csv_path)
    o = cfg.imu
    Q = np.diag([o.acc_noise**2] * 3 + [o.gyro_noise**2] * 3)
    reporter.info(f'Propagating {len(samples)} IMU samples from: {imu_csv_path}')
    for mode in o.modes:
        report, rows = imu.propagate(samples, Q, mode=mode, g=np.asarray(o.gravity))
        path = os.path.join(out, f'imu_check_{mode}.csv')
        benchmark.write_rows_csv(path, IMU_REPORT_COLUMNS, rows)
        tr = report.cov_traces
        reporter.info(f'[{mode}] samples {report.n_samples}  diverged {report.diverged}')
        reporter.info(f'[{mode}] quaternion norm drift {report.norm_drift:.3e}  '
                      f'(before renormalisation {report.raw_norm_deviation:.3e})')
        reporter.info(f'[{mode}] covariance trace {tr[0] if tr else float("nan"):.6g} -> '
                      f'{tr[-1] if tr else float("nan"):.6g}  '
                      f'PSD violations {report.psd_violations}')
        reporter.info(f'[{mode}] final p {np.round(report.final_mean[imu.VioState.P], 6)}  '
                      f'q {np.round(report.final_mean[imu.VioState.Q], 9)}  '
                      f'yaw {np.degrees(report.final_yaw):.6f} deg')
        reporter.info(f'Per-sample report written to: {path}')
    return EXIT_OK


def cmd_selftest(seed: int=0) -> int:
    """Run the embedded invariant suite.

    Returns:
        int: 0 if every property passed, otherwise 1.

    """
    return EXIT_OK if SelfTest(seed=seed).run() else EXIT_SELFTEST


def main(argv: Sequence[str]=None) -> int:
    """Command-line entry point.

    Args:
        argv (Sequence[str], optional): Arguments, excluding the program
            name. Defaults to ``sys.argv[1:]``.

    Returns:
        int: Exit code.

    """
    args = build_parser().parse_args(argv)
    try:
        if args.command == 'selftest':
            return cmd_selftest(args.seed)
        cfg = load_config(args)
        out = prepare_output(args.out)
        if args.command == 'run-slam':
            return cmd_run_slam(cfg, out)
        if args.command == 'sweep-swap':
            return cmd_sweep_swap(cfg, out)
        if args.command == 'sweep-init-noise':
            return cmd_sweep_init_noise(cfg, out)
        return cmd_imu_check(cfg, args.imu_csv, out)
    except (ConfigError, ImuFormatError) as err:
        reporter.error(f'Configuration error: {err}')
        return EXIT_CONFIG
    except OSError as err:
        reporter.error(f'I/O error: {err}')
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
