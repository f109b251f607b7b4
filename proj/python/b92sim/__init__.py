"""Gigahertz-clocked B92 QKD link simulator (C++ core)."""

from ._b92sim import *  # noqa: F401,F403
from ._b92sim import __version__  # noqa: F401
