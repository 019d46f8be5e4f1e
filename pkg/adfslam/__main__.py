#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   Entry point for ``python -m adfslam``.

:Platform:  Linux/Windows | Python 3.9+
:Developer: J Berendt
:Email:     support@s3dev.uk

"""

import sys
from adfslam.cli import main

sys.exit(main())
