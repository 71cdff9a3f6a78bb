"""Residue expansions of renewal functions and multi-term ruin approximations."""

from .errors import *  # noqa: F401,F403
from .expansion import (
    ExactModeReport,
    Expansion,
    evaluate,
    exact_mode_check,
    expand_density,
    expand_mass,
    expand_U,
    expand_v,
    linear_part,
)
from .models import *  # noqa: F401,F403
from .oracles import *  # noqa: F401,F403
from .residue import *  # noqa: F401,F403
from .rootfinder import *  # noqa: F401,F403
from .ruin import *  # noqa: F401,F403
from .validation import ValidationReport, run_suite

__version__ = "0.1.0"
