"""Surprise in elections held over biased social networks."""

from .engine import SurpriseEngine, TrialConfig, compare_rules, run_trials  # noqa
from .errors import *  # noqa
from .streams import RngSeed  # noqa
