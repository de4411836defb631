"""Exterior impedance scattering: forward solver, verification checks and stability tools."""

from ._impscat import *  # noqa: F401,F403
from ._impscat import __doc__  # noqa: F401

__version__ = "0.1.0"
