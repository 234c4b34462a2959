"""Step-level credit assignment engine for tool-integrated SQL rollouts.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from stepcredit._core import *  # noqa: F401,F403
from stepcredit._core import fixtures  # noqa: F401

__version__ = "0.1.0"
