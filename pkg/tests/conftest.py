"""Pytest collection wiring: put ``tests/`` on ``sys.path`` so the test
modules can import ``base`` and ``testlibs`` as they do under unittest."""
import os
import sys
sys.path.insert(0, os.path.dirname(os.path.realpath(__file__)))
