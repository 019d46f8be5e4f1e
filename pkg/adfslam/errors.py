#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   This module provides the exception hierarchy raised by the
            ``adfslam`` library.

            All library errors derive from :class:`AdfSlamError`, so a
            caller can trap the whole family with a single ``except``
            clause. Where a more specific built-in base applies (for
            example :class:`ValueError` for dimension problems), the error
            also derives from it.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

"""


class AdfSlamError(Exception):
    """Base class for all ``adfslam`` errors."""


class InvalidDimensionError(AdfSlamError, ValueError):
    """Raised when a dimension is zero, negative or mismatched."""


class ShapeError(AdfSlamError, ValueError):
    """Raised when a mapping returns an output of inconsistent shape."""


class NumericError(AdfSlamError, ArithmeticError):
    """Raised when a computation produces a non-finite value.

    Args:
        msg (str): Error message.
        index (int, optional): Index of the offending sigma point or
            coordinate, if known. Defaults to None.

    """

    def __init__(self, msg: str, index: int=None):
        """NumericError class initialiser."""
        super().__init__(msg)
        self.index = index


class NonPsdCovarianceError(AdfSlamError, ArithmeticError):
    """Raised when a covariance cannot be factorised at maximum jitter.

    Args:
        msg (str): Error message.
        jitter (float, optional): The last jitter value attempted.
            Defaults to None.

    """

    def __init__(self, msg: str, jitter: float=None):
        """NonPsdCovarianceError class initialiser."""
        super().__init__(msg)
        self.jitter = jitter


class SingularInnovationError(AdfSlamError, ArithmeticError):
    """Raised when the innovation covariance cannot be inverted."""


class DegenerateDepthError(AdfSlamError, ValueError):
    """Raised when a landmark lies on (or behind) the camera plane."""


class NoMeasurementError(AdfSlamError):
    """Raised when a measurement model is requested for no landmarks."""


class DegenerateScenarioError(AdfSlamError):
    """Raised when a generated scenario never observes a landmark."""


class DegenerateAlignmentError(AdfSlamError, ValueError):
    """Raised when a point set is too degenerate to be aligned."""


class ConfigError(AdfSlamError, ValueError):
    """Raised when a configuration cannot be parsed or is out of range.

    Args:
        msg (str): Error message.
        field (str, optional): Name of the offending field.
            Defaults to None.

    """

    def __init__(self, msg: str, field: str=None):
        """ConfigError class initialiser."""
        super().__init__(f'{field}: {msg}' if field else msg)
        self.field = field


class ImuFormatError(AdfSlamError, ValueError):
    """Raised when an IMU CSV file does not conform to the schema.

    Args:
        msg (str): Error message.
        line (int, optional): 1-based line number of the offending row.
            Defaults to None.

    """

    def __init__(self, msg: str, line: int=None):
        """ImuFormatError class initialiser."""
        super().__init__(f'line {line}: {msg}' if line else msg)
        self.line = line
