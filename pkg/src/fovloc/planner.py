"""UAV dynamics, discrete action sets and the information-seeking policies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import entr

from .belief import GridBelief, cell_center_arrays
from .geometry import SourcePosition, UavState, relative_bearing_array, wrap_heading
from .sensors import N_BEARING_BINS, BearingModel, FovModel

SPEED_MPS = 5.0
HEADING_RATE_DPS = 10.0
VELOCITY_DIRECTIONS_DEG = tuple(range(0, 360, 45))
RFB_LATTICE_SIDE = 10
# RFB waypoint scores closer than this are ties; summation order alone moves
# them ~1e-16. Greedy actions use an exact argmax since neighbouring
# successors at high rates differ by genuinely tiny amounts.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class Action:
    velocity_dir_deg: float
    speed_mps: float = SPEED_MPS
    heading_rate_dps: float = 0.0

    @property
    def velocity(self) -> tuple[float, float]:
        """(north, east) velocity in m/s."""
        vn, ve = _unit(self.velocity_dir_deg) * self.speed_mps
        return float(vn), float(ve)


def _unit(direction_deg: float) -> np.ndarray:
    r = math.radians(direction_deg)
    v = np.array([math.cos(r), math.sin(r)])
    v[np.abs(v) < 1e-12] = 0.0
    return v


def build_action_set(speed_mps=SPEED_MPS, heading_rate_dps=HEADING_RATE_DPS, with_heading=True):
    """Actions ordered by direction (outer) then heading rate -, 0, + (inner)."""
    rates = (-heading_rate_dps, 0.0, heading_rate_dps) if with_heading else (0.0,)
    return tuple(
        Action(float(d), speed_mps, float(r)) for d in VELOCITY_DIRECTIONS_DEG for r in rates
    )


ACTIONS = build_action_set()
VELOCITY_ACTIONS = build_action_set(with_heading=False)


def propagate(x: UavState, u: Action, dt: float, area_side_m: float | None = None) -> UavState:
    """Forward-Euler step; clamps the position to ``[0, area_side_m]`` if given."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    vn, ve = u.velocity
    north = x.north_m + vn * dt
    east = x.east_m + ve * dt
    if area_side_m is not None:
        north = min(max(north, 0.0), area_side_m)
        east = min(max(east, 0.0), area_side_m)
    return UavState(north, east, wrap_heading(x.heading_deg + u.heading_rate_dps * dt))


@lru_cache(maxsize=32)
def _action_arrays(actions):
    vel = np.array([u.velocity for u in actions])
    rates = np.array([u.heading_rate_dps for u in actions])
    return vel, rates


def successor_arrays(x: UavState, actions, dt: float, area_side_m: float | None = None):
    """Vectorized :func:`propagate` over an action sequence; (k,) arrays."""
    vel, rates = _action_arrays(tuple(actions))
    north = x.north_m + vel[:, 0] * dt
    east = x.east_m + vel[:, 1] * dt
    if area_side_m is not None:
        north = np.clip(north, 0.0, area_side_m)
        east = np.clip(east, 0.0, area_side_m)
    heading = np.mod(x.heading_deg + rates * dt, 360.0)
    return north, east, heading


def binary_entropy(p):
    p = np.clip(p, 0.0, 1.0)
    return entr(p) + entr(1.0 - p)


def _mi_from_outcomes(weights, probs):
    """I(z; cell) from cell weights (m,) and P(z | cell) of shape (..., m, n_z)."""
    marginal = np.einsum("m,...mz->...z", weights, probs)
    h_z = entr(np.clip(marginal, 0.0, 1.0)).sum(axis=-1)
    h_z_given = np.einsum("m,...m->...", weights, entr(probs).sum(axis=-1))
    return np.maximum(h_z - h_z_given, 0.0)


def _fov_scores(b: GridBelief, model: FovModel, north, east, heading):
    cn, ce = b.cell_centers
    rel = relative_bearing_array(north[:, None], east[:, None], heading[:, None], cn, ce)
    codes = model.region_codes(rel) + 1
    mu = model.mistake_rate
    p_table = np.array([mu, 0.5, 1.0 - mu])
    w = b.flat
    h_z = binary_entropy(p_table[codes] @ w)
    h_z_given = binary_entropy(p_table)[codes] @ w
    return np.maximum(h_z - h_z_given, 0.0)


def _bearing_tables(model: BearingModel, north, east, cn, ce):
    """Sparse P(bin | candidate, cell) plus each pair's observation entropy."""
    local = model.local_bin_probs(north[:, None], east[:, None], cn, ce)
    if local is None:
        return None
    bins, p = local
    n_cand = north.shape[0]
    flat_bins = (np.arange(n_cand)[:, None, None] * N_BEARING_BINS + bins).ravel()
    return n_cand, flat_bins, p, entr(p).sum(axis=-1)


def _scores_from_tables(tables, w):
    n_cand, flat_bins, p, h_cell = tables
    marginal = np.bincount(flat_bins, weights=(w[:, None] * p).ravel(),
                           minlength=n_cand * N_BEARING_BINS).reshape(n_cand, N_BEARING_BINS)
    h_z = entr(np.clip(marginal, 0.0, 1.0)).sum(axis=-1)
    return np.maximum(h_z - h_cell @ w, 0.0)


def _bearing_scores(b: GridBelief, model: BearingModel, north, east):
    cn, ce = b.cell_centers
    tables = _bearing_tables(model, north, east, cn, ce)
    return None if tables is None else _scores_from_tables(tables, b.flat)


@lru_cache(maxsize=4)
def _cached_tables(model, area_side_m, cell_side_m, candidates):
    north = np.array([c.north_m for c in candidates])
    east = np.array([c.east_m for c in candidates])
    cn, ce = cell_center_arrays(area_side_m, cell_side_m)
    return _bearing_tables(model, north, east, cn, ce)


def _outcome_scores(b: GridBelief, model, north, east, heading):
    if isinstance(model, BearingModel):
        scores = _bearing_scores(b, model, north, east)
        if scores is not None:
            return scores
    cn, ce = b.cell_centers
    probs = model.outcome_probs(north[:, None], east[:, None], heading[:, None], cn, ce)
    return _mi_from_outcomes(b.flat, probs)


def scores_at(b: GridBelief, model, north, east, heading):
    """Mutual information between the next observation and the source cell
    for each candidate state given as parallel (k,) arrays."""
    north = np.atleast_1d(np.asarray(north, dtype=float))
    east = np.atleast_1d(np.asarray(east, dtype=float))
    heading = np.broadcast_to(np.asarray(heading, dtype=float), north.shape)
    if isinstance(model, FovModel):
        return _fov_scores(b, model, north, east, heading)
    return _outcome_scores(b, model, north, east, heading)


def mutual_information(b: GridBelief, model, x_next: UavState) -> float:
    """Expected entropy reduction of ``b`` from one observation at ``x_next``.

    Computed as H(z) - H(z | source); for bearing models the observation is
    the 10 degree bearing bin.
    """
    return float(scores_at(b, model, x_next.north_m, x_next.east_m, x_next.heading_deg)[0])


def action_scores(b: GridBelief, x: UavState, model, dt: float, actions=ACTIONS, area_side_m=None):
    if area_side_m is None:
        area_side_m = b.area_side_m
    north, east, heading = successor_arrays(x, actions, dt, area_side_m)
    return scores_at(b, model, north, east, heading)


def first_max(scores, tol=TIE_TOL) -> int:
    """Index of the first score within ``tol`` of the maximum."""
    scores = np.asarray(scores)
    return int(np.flatnonzero(scores >= scores.max() - tol)[0])


def greedy_select(b: GridBelief, x: UavState, model, dt: float, actions=None, return_scores=False):
    """Action whose successor state maximizes the mutual information.

    Bearing sensors ignore heading, so they default to the 8 pure velocity
    actions. The first maximum in action order wins.
    """
    if actions is None:
        actions = ACTIONS if isinstance(model, FovModel) else VELOCITY_ACTIONS
    scores = action_scores(b, x, model, dt, actions)
    best = actions[int(np.argmax(scores))]
    return (best, scores) if return_scores else best


def random_select(rng, actions=ACTIONS) -> Action:
    return actions[int(rng.integers(len(actions)))]


def rfb_candidates(area_side_m: float, side: int = RFB_LATTICE_SIDE):
    """Uniform lattice of waypoints at the centers of a side x side tiling."""
    step = area_side_m / side
    pts = (np.arange(side) + 0.5) * step
    return [SourcePosition(n, e) for n in pts for e in pts]


def rfb_select_waypoint(b: GridBelief, x: UavState, model: BearingModel, candidates=None,
                        return_scores=False):
    """Waypoint whose bearing measurement most reduces expected entropy.

    Scoring is per measurement; travel time from ``x`` is not penalized.
    """
    if candidates is None:
        candidates = rfb_candidates(b.area_side_m)
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidate waypoint set is empty")
    tables = None
    if isinstance(model, BearingModel):
        tables = _cached_tables(model, b.area_side_m, b.cell_side_m, tuple(candidates))
    if tables is not None:
        scores = _scores_from_tables(tables, b.flat)
    else:
        north = np.array([c.north_m for c in candidates])
        east = np.array([c.east_m for c in candidates])
        scores = scores_at(b, model, north, east, 0.0)
    best = candidates[first_max(scores)]
    return (best, scores) if return_scores else best
