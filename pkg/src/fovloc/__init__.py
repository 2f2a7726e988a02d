"""Field-of-view RF source localization: sensor models, histogram filter,
greedy information planner and a Monte-Carlo harness."""

from .belief import (
    ContradictionError,
    GridBelief,
    bayes_update,
    entropy,
    map_estimate,
    max_norm,
    predictive_obs_prob,
    uniform_belief,
)
from .estimators import BearingLocalizer, FovLocalizer, MistakeRateEstimator
from .geometry import (
    DegenerateGeometryError,
    SourcePosition,
    UavState,
    bearing,
    relative_bearing,
    wrap_angle,
)
from .planner import (
    ACTIONS,
    Action,
    greedy_select,
    mutual_information,
    propagate,
    random_select,
    rfb_select_waypoint,
)
from .replay import classify, empirical_stats, load_log
from .sensors import (
    BearingModel,
    FovModel,
    bearing_likelihood,
    bearing_sample,
    fov_likelihood,
    fov_sample,
)
from .simulator import TrialConfig, run_batch, run_trial, sweep_cone_width, sweep_sample_rate

__version__ = "0.1.0"
