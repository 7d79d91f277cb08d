"""Desk-scale studies: bias sweeps, the beam example and the no-consistency counterexample."""

from .beam import *  # noqa: F401,F403
from .beam import __all__ as _beam_all
from .bias import *  # noqa: F401,F403
from .bias import __all__ as _bias_all
from .no_consistency import *  # noqa: F401,F403
from .no_consistency import __all__ as _nc_all

__all__ = [*_beam_all, *_bias_all, *_nc_all]
