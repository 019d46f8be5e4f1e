#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   Perform automated testing on the ``cli`` module.

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
import filecmp
import numpy as np
# locals
from base import TestBase
from testlibs import msgs
from adfslam import cli
from adfslam.errors import ConfigError


class TestCli(TestBase):
    """Testing suite for the ``cli`` module."""

    _MSG1 = msgs.templates.not_as_expected.general
    _SMALL = ['--set', 'n_steps=20', '--set', 'n_landmarks=8']

    @classmethod
    def setUpClass(cls):
        """Run this logic at the start of all test cases."""
        super().setUpClass()
        msgs.startoftest.startoftest(module_name='cli')

    def test01a__parse_seeds(self):
        """Test the ``parse_seeds`` function.

        :Test:
            - Verify a count, a comma list, a single listed seed and a
              JSON list.
            - Verify unparsable and empty selections raise ConfigError.

        """
        self.assertEqual(cli.parse_seeds('3'), [0, 1, 2])
        self.assertEqual(cli.parse_seeds('4,9'), [4, 9])
        self.assertEqual(cli.parse_seeds('7,'), [7])
        self.assertEqual(cli.parse_seeds('[1, 2]'), [1, 2])
        for text in ('abc', '0', '-1,2'):
            with self.subTest(text=text):
                with self.assertRaises(ConfigError):
                    cli.parse_seeds(text)

    def test02a__sweep_swap(self):
        """Test the ``sweep-swap`` command.

        :Test:
            - Verify the exit code, the three CSV files and the number
              of results rows (levels x seeds x modes).
            - Verify the parameter echo marks defaulted fields.

        """
        out = os.path.join(self._DIR_TMP, 'swap')
        rtn, lines = self.capture(cli.main, ['sweep-swap', '--out', out, '--seeds', '2',
                                             '--parallelism', '1', '--set',
                                             'swap_levels=[0, 0.05]', *self._SMALL])
        self.assertEqual(rtn, cli.EXIT_OK, msg=self._MSG1.format(cli.EXIT_OK, rtn))
        for name in ('results', 'aggregate', 'moving'):
            self.assertTrue(os.path.isfile(os.path.join(out, f'sweep_swap_{name}.csv')))
        with open(os.path.join(out, 'sweep_swap_results.csv'), encoding='utf-8') as f:
            self.assertEqual(len(f.read().splitlines()), 1 + 2 * 2 * 2)
        self.assertTrue(any('scenario.prior_std' in ln and '(default)' in ln for ln in lines))
        self.assertTrue(any('scenario.n_steps' in ln and '(default)' not in ln for ln in lines))

    def test02b__sweep_init_noise__determinism(self):
        """Test the ``sweep-init-noise`` command across parallelism.

        :Test:
            - Verify serial and two-worker runs write byte-identical
              results and aggregate files, and no moving file.

        """
        dirs = []
        for n in ('1', '2'):
            out = os.path.join(self._DIR_TMP, f'init_{n}')
            rtn, _ = self.capture(cli.main, ['sweep-init-noise', '--out', out, '--seeds', '2',
                                             '--parallelism', n, '--set',
                                             'init_noise_levels=[0, 1]', *self._SMALL])
            self.assertEqual(rtn, cli.EXIT_OK)
            dirs.append(out)
        for name in ('results', 'aggregate'):
            fname = f'sweep_init_noise_{name}.csv'
            self.assertTrue(filecmp.cmp(os.path.join(dirs[0], fname),
                                        os.path.join(dirs[1], fname), shallow=False))
        self.assertFalse(os.path.exists(os.path.join(dirs[0], 'sweep_init_noise_moving.csv')))

    def test03a__run_slam__trajectories(self):
        """Test the ``run-slam`` command with trajectory dumps.

        :Test:
            - Verify the results file and one trajectory file per mode.

        """
        out = os.path.join(self._DIR_TMP, 'single')
        rtn, _ = self.capture(cli.main, ['run-slam', '--out', out, '--dump-trajectories',
                                         *self._SMALL])
        self.assertEqual(rtn, cli.EXIT_OK)
        self.assertTrue(os.path.isfile(os.path.join(out, 'run_slam_results.csv')))
        for mode in ('EKF', 'UKF'):
            self.assertTrue(os.path.isfile(os.path.join(out, f'traj_single_{mode}_0_0.csv')))

    def test04a__config_errors(self):
        """Test the configuration error exit code.

        :Test:
            - Verify an out-of-range value, a missing configuration file
              and an invalid seed list each exit with code 2.

        """
        out = os.path.join(self._DIR_TMP, 'errors')
        cases = (['--set', 'rho=1.5'],
                 ['--config', os.path.join(self._DIR_TMP, 'missing.json')],
                 ['--seeds', 'x'])
        for extra in cases:
            with self.subTest(extra=extra):
                rtn, lines = self.capture(cli.main, ['run-slam', '--out', out, *extra])
                self.assertEqual(rtn, cli.EXIT_CONFIG, msg=self._MSG1.format(2, rtn))
                self.assertTrue(any('Configuration error' in ln for ln in lines))

    def test04b__io_error(self):
        """Test the I/O error exit code.

        :Test:
            - Verify an output directory beneath a regular file exits
              with code 3.

        """
        blocker = os.path.join(self._DIR_TMP, 'blocker')
        with open(blocker, 'w', encoding='utf-8') as f:
            f.write('x')
        rtn, _ = self.capture(cli.main, ['run-slam', '--out', os.path.join(blocker, 'sub'),
                                         *self._SMALL])
        self.assertEqual(rtn, cli.EXIT_IO, msg=self._MSG1.format(3, rtn))

    def test05a__imu_check(self):
        """Test the ``imu-check`` command.

        :Test:
            - Verify a well-formed file exits 0 and writes a report per
              mode with one row per sample.
            - Verify a malformed file exits with code 2.

        """
        good = os.path.join(self._DIR_TMP, 'imu.csv')
        t = np.arange(50) * 5_000_000
        with open(good, 'w', encoding='utf-8') as f:
            f.write('t_ns,wx,wy,wz,ax,ay,az\n')
            f.writelines(f'{ti},0,0,0.1,0,0,9.81\n' for ti in t)
        out = os.path.join(self._DIR_TMP, 'imu')
        rtn, lines = self.capture(cli.main, ['imu-check', good, '--out', out])
        self.assertEqual(rtn, cli.EXIT_OK)
        for mode in ('EKF', 'UKF'):
            with open(os.path.join(out, f'imu_check_{mode}.csv'), encoding='utf-8') as f:
                self.assertEqual(len(f.read().splitlines()), 51)
        self.assertTrue(any('yaw' in ln for ln in lines))
        bad = os.path.join(self._DIR_TMP, 'imu_bad.csv')
        with open(bad, 'w', encoding='utf-8') as f:
            f.write('t_ns,wx,wy,wz,ax,ay,az\n10,0,0,0,0,0,9.81\n5,0,0,0,0,0,9.81\n')
        rtn, _ = self.capture(cli.main, ['imu-check', bad, '--out', out])
        self.assertEqual(rtn, cli.EXIT_CONFIG)
