#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the level-gated terminal reporter used
            throughout the library.

            Messages are written to the terminal using the
            ``utils4.user_interface`` module, and are filtered by a
            verbosity level which is read from the ``ADF_SLAM_LOG``
            environment variable.

            The levels, in increasing verbosity, are:

                - **error**: Only problems are reported.
                - **info**: Problems, progress and effective parameters
                  (the default).
                - **debug**: All of the above, plus per-run detail.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

:Example:

    Report a message at the *info* level::

        >>> from adfslam.reporter import reporter
        >>> reporter.info('Starting sweep ...')

"""

import os
from utils4.user_interface import ui


class Reporter:
    """Level-gated wrapper around the ``utils4`` user interface.

    Args:
        level (str, optional): Verbosity level. If None, the level is
            read from the ``ADF_SLAM_LOG`` environment variable.
            Defaults to None.

    """

    ENVVAR = 'ADF_SLAM_LOG'
    LEVELS = {'error': 0, 'info': 1, 'debug': 2}

    def __init__(self, level: str=None):
        """Reporter class initialiser."""
        self._level = self.LEVELS['info']
        self.set_level(level if level is not None else os.environ.get(self.ENVVAR, 'info'))

    @property
    def level(self) -> str:
        """Name of the current verbosity level."""
        return next(k for k, v in self.LEVELS.items() if v == self._level)

    def debug(self, msg: str):
        """Report a detail message at the *debug* level.

        Args:
            msg (str): Message to be reported.

        """
        if self._level >= self.LEVELS['debug']:
            ui.print_normal(msg)

    def error(self, msg: str):
        """Report a problem. These messages are always shown.

        Args:
            msg (str): Message to be reported.

        """
        ui.print_warning(msg)

    def info(self, msg: str):
        """Report a progress message at the *info* level.

        Args:
            msg (str): Message to be reported.

        """
        if self._level >= self.LEVELS['info']:
            ui.print_alert(msg)

    def set_level(self, level: str):
        """Set the verbosity level.

        An unrecognised level falls back to *info* and a warning is
        displayed.

        Args:
            level (str): One of 'error', 'info' or 'debug'.

        """
        key = str(level).strip().lower()
        if key not in self.LEVELS:
            ui.print_warning(f'[WARNING]: Unrecognised log level \'{level}\', using \'info\'.')
            key = 'info'
        self._level = self.LEVELS[key]


reporter = Reporter()
