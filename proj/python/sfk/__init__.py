"""Sketched flexible Golub-Kahan solvers for large inverse problems."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401

SOLVERS = ("lsqr", "lsmr", "flsqr", "flsmr", "sflsqr", "sflsmr")
