"""Observation models: the two-antenna field-of-view (FOV) sensor and the
Gaussian bearing sensor used by the instantaneous-bearing (IB) and
rotate-for-bearing (RFB) baselines.

Each model exposes scalar helpers for single evaluations and vectorized
methods the histogram filter and planners run over whole grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .geometry import (
    COINCIDENT_TOL_M,
    SourcePosition,
    UavState,
    bearing,
    bearing_array,
    distance,
    relative_bearing_array,
    relative_bearing,
    wrap_angle,
    wrap_angle_array,
    wrap_heading,
)

DENSITY_FLOOR = 1e-300

# Absorbs arctan2 round-off so cone edges hit by construction stay closed.
CONE_EDGE_TOL_DEG = 1e-9

FRONT_CONE = "front_cone"
REAR_CONE = "rear_cone"
UNCERTAINTY = "uncertainty"

N_BEARING_BINS = 36
BEARING_BIN_DEG = 360.0 / N_BEARING_BINS


@dataclass(frozen=True)
class FovModel:
    cone_width_deg: float = 120.0
    mistake_rate: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.cone_width_deg <= 180.0):
            raise ValueError(f"cone width must be in (0, 180], got {self.cone_width_deg}")
        if not (0.0 <= self.mistake_rate < 0.5):
            raise ValueError(f"mistake rate must be in [0, 0.5), got {self.mistake_rate}")

    kind = "fov"
    n_outcomes = 2

    def region_codes(self, rel_bearing_deg):
        """+1 front cone, -1 rear cone, 0 uncertainty region (vectorized)."""
        mag = np.abs(rel_bearing_deg)
        half = 0.5 * self.cone_width_deg
        front = mag <= half + CONE_EDGE_TOL_DEG
        rear = mag >= 180.0 - half - CONE_EDGE_TOL_DEG
        return np.where(front, 1, np.where(rear, -1, 0))

    def _p_from_codes(self, codes):
        mu = self.mistake_rate
        return np.where(codes == 1, 1.0 - mu, np.where(codes == -1, mu, 0.5))

    def p_one(self, rel_bearing_deg):
        """P(z=1) as a function of relative bearing (vectorized)."""
        return self._p_from_codes(self.region_codes(rel_bearing_deg))

    def outcome_probs(self, north, east, heading, cell_north, cell_east):
        """Stacked P(z | state, cell) with outcomes on the last axis."""
        rel = relative_bearing_array(north, east, heading, cell_north, cell_east)
        p1 = self.p_one(rel)
        return np.stack([1.0 - p1, p1], axis=-1)

    def likelihood(self, obs, north, east, heading, cell_north, cell_east):
        z = _check_binary(obs)
        codes = self.region_codes(relative_bearing_array(north, east, heading, cell_north, cell_east))
        # z=0 mirrors the cones, which keeps mu exact instead of 1 - (1 - mu)
        return self._p_from_codes(codes if z == 1 else -codes)

    def sample(self, x: UavState, s: SourcePosition, rng) -> int:
        return fov_sample(self, x, s, rng)


@dataclass(frozen=True)
class BearingModel:
    """Gaussian bearing sensor. ``rotation_time_s`` is 0 for IB, > 0 for RFB.

    With ``quantized`` (the default) the filter treats each reading as the
    10 degree bin it falls in, so filtering and planning share one discrete
    observation model. Otherwise the filter weights cells by the Gaussian
    density of the raw bearing error.
    """

    sigma_deg: float = 5.0
    rotation_time_s: float = 0.0
    quantized: bool = True

    def __post_init__(self):
        if not self.sigma_deg > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma_deg}")
        if not self.rotation_time_s >= 0.0:
            raise ValueError(f"rotation time must be >= 0, got {self.rotation_time_s}")

    n_outcomes = N_BEARING_BINS

    @property
    def kind(self):
        return "rfb" if self.rotation_time_s > 0 else "ib"

    def density(self, error_deg):
        """Gaussian density per degree of wrapped bearing error, floored."""
        e = wrap_angle_array(error_deg)
        d = np.exp(-0.5 * (e / self.sigma_deg) ** 2) / (self.sigma_deg * math.sqrt(2.0 * math.pi))
        return np.maximum(d, DENSITY_FLOOR)

    def _edge_z(self, true_deg, offsets):
        # bin edges relative to the truth, anchored at the truth's own bin j0;
        # offsets -18..18 tile [-180 - f, 180 - f] with f = true - 10 * j0
        true = np.asarray(true_deg, dtype=float)
        j0 = np.floor(true / BEARING_BIN_DEG)
        return ((j0[..., None] + offsets) * BEARING_BIN_DEG - true[..., None]) / self.sigma_deg, j0

    def _bin_total(self, true_deg):
        half = N_BEARING_BINS // 2
        z, _ = self._edge_z(true_deg, np.array([-half, half]))
        return _normal_mass(z[..., 0], z[..., 1])

    def bin_probs(self, bin_index, true_deg):
        """P(reading lands in bin ``bin_index`` | true bearing); broadcasts."""
        true = np.asarray(true_deg, dtype=float)
        j0 = np.floor(true / BEARING_BIN_DEG)
        half = N_BEARING_BINS // 2
        o = np.mod(np.asarray(bin_index) - j0 + half, N_BEARING_BINS) - half
        lo = ((j0 + o) * BEARING_BIN_DEG - true) / self.sigma_deg
        hi = ((j0 + o + 1) * BEARING_BIN_DEG - true) / self.sigma_deg
        return _normal_mass(lo, hi) / self._bin_total(true)

    def likelihood(self, obs, north, east, heading, cell_north, cell_east):
        true = bearing_array(north, east, cell_north, cell_east)
        if self.quantized:
            return np.maximum(self.bin_probs(bearing_bin(obs), true), DENSITY_FLOOR)
        return self.density(float(obs) - true)

    def outcome_probs(self, north, east, heading, cell_north, cell_east):
        """Probability of each 10 degree bearing bin given state and cell.

        Bin k covers [10k, 10k + 10) degrees; outcomes are on the last axis.
        """
        true = bearing_array(north, east, cell_north, cell_east)
        return self.bin_probs(np.arange(N_BEARING_BINS), true[..., None])

    def local_bin_probs(self, north, east, cell_north, cell_east):
        """Bin probabilities restricted to bins within 10 sigma of the truth.

        Returns ``(bins, p)`` with matching trailing axis; ``bins`` holds bin
        indices in [0, 36). The omitted mass is below 1e-22. Returns ``None``
        when the window would cover the whole circle.
        """
        k = int(math.ceil(self.sigma_deg))
        if 2 * k + 1 >= N_BEARING_BINS:
            return None
        true = bearing_array(north, east, cell_north, cell_east)
        z, j0 = self._edge_z(true, np.arange(-k, k + 2))
        p = _adjacent_masses(z)
        p /= self._bin_total(true)[..., None]
        bins = np.mod(j0[..., None] + np.arange(-k, k + 1), N_BEARING_BINS).astype(np.intp)
        return bins, p

    def sample(self, x: UavState, s: SourcePosition, rng) -> float:
        return bearing_sample(self, x, s, rng)


def _normal_mass(a, b):
    """P(a <= X <= b) for standard normal X, via tails to avoid cancellation."""
    qa = ndtr(-np.abs(a))
    qb = ndtr(-np.abs(b))
    return np.where(b <= 0, qb - qa, np.where(a >= 0, qa - qb, 1.0 - qa - qb))


def _adjacent_masses(z):
    """:func:`_normal_mass` over consecutive edges along the last axis."""
    q = ndtr(-np.abs(z))
    a, b = z[..., :-1], z[..., 1:]
    qa, qb = q[..., :-1], q[..., 1:]
    return np.where(b <= 0, qb - qa, np.where(a >= 0, qa - qb, 1.0 - qa - qb))


def bearing_bin(bearing_deg: float) -> int:
    """Index of the 10 degree bin containing a bearing."""
    return int(math.floor(wrap_heading(float(bearing_deg)) / BEARING_BIN_DEG)) % N_BEARING_BINS


def _check_binary(z) -> int:
    if isinstance(z, (bool, np.bool_)) or z not in (0, 1):
        raise ValueError(f"FOV observation must be 0 or 1, got {z!r}")
    return int(z)


def classify_relative_bearing(delta_deg: float, cone_width_deg: float) -> str:
    """Region of a relative bearing: front cone, rear cone or uncertainty.

    Cone edges are inclusive; where the cones touch (width 180) the front
    cone takes precedence.
    """
    half = 0.5 * cone_width_deg
    if abs(delta_deg) <= half + CONE_EDGE_TOL_DEG:
        return FRONT_CONE
    if abs(wrap_angle(delta_deg - 180.0)) <= half + CONE_EDGE_TOL_DEG:
        return REAR_CONE
    return UNCERTAINTY


def fov_likelihood_from_delta(m: FovModel, delta_deg: float, z) -> float:
    z = _check_binary(z)
    region = classify_relative_bearing(delta_deg, m.cone_width_deg)
    if region == UNCERTAINTY:
        return 0.5
    # return mu itself rather than 1 - (1 - mu) so the branches mirror exactly
    correct = (region == FRONT_CONE) == (z == 1)
    return 1.0 - m.mistake_rate if correct else m.mistake_rate


def fov_likelihood(m: FovModel, x: UavState, s: SourcePosition, z) -> float:
    """P(z | x, s) for the FOV sensor."""
    if distance(x, s) < COINCIDENT_TOL_M:
        delta = 0.0
    else:
        delta = relative_bearing(x, s)
    return fov_likelihood_from_delta(m, delta, z)


def fov_sample(m: FovModel, x: UavState, s: SourcePosition, rng) -> int:
    """Draw z in {0, 1}; consumes exactly one uniform from ``rng``."""
    p1 = fov_likelihood(m, x, s, 1)
    return int(rng.random() < p1)


def bearing_sample(m: BearingModel, x: UavState, s: SourcePosition, rng) -> float:
    """True bearing plus N(0, sigma^2) noise, wrapped to [0, 360)."""
    b = bearing(x, s)
    return wrap_heading(b + m.sigma_deg * rng.standard_normal())


def bearing_likelihood(m: BearingModel, obs: float, x: UavState, s: SourcePosition) -> float:
    b = bearing(x, s)
    return float(m.density(obs - b))
