"""Angle conventions, planar UAV/source states and bearings.

All angles are degrees, measured east of north. Positions are meters in a
local north/east frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this separation the relative bearing to a cell center is defined as 0.
COINCIDENT_TOL_M = 1e-6


class DegenerateGeometryError(ValueError):
    """UAV and source positions coincide, so no bearing exists."""


def wrap_angle(a: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = 180.0 - math.fmod(180.0 - a, 360.0)
    if r <= -180.0:
        r += 360.0
    elif r > 180.0:
        r -= 360.0
    return r


def wrap_angle_array(a):
    """Vectorized :func:`wrap_angle` (no finiteness check)."""
    return 180.0 - np.mod(180.0 - np.asarray(a, dtype=float), 360.0)


def wrap_heading(a: float) -> float:
    """Wrap an angle in degrees to [0, 360)."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = math.fmod(a, 360.0)
    if r < 0.0:
        r += 360.0
    if r >= 360.0:
        r -= 360.0
    return r


@dataclass(frozen=True)
class UavState:
    north_m: float
    east_m: float
    heading_deg: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.north_m) and math.isfinite(self.east_m)):
            raise ValueError("UAV position must be finite")
        object.__setattr__(self, "north_m", float(self.north_m))
        object.__setattr__(self, "east_m", float(self.east_m))
        object.__setattr__(self, "heading_deg", wrap_heading(float(self.heading_deg)))


@dataclass(frozen=True)
class SourcePosition:
    north_m: float
    east_m: float

    def __post_init__(self):
        if not (math.isfinite(self.north_m) and math.isfinite(self.east_m)):
            raise ValueError("source position must be finite")
        object.__setattr__(self, "north_m", float(self.north_m))
        object.__setattr__(self, "east_m", float(self.east_m))


def distance(x: UavState, s: SourcePosition) -> float:
    return math.hypot(s.north_m - x.north_m, s.east_m - x.east_m)


def bearing(x: UavState, s: SourcePosition) -> float:
    """Bearing in [0, 360) of the ray from the UAV to the source.

    Raises DegenerateGeometryError when the two positions coincide.
    """
    dn = s.north_m - x.north_m
    de = s.east_m - x.east_m
    if math.hypot(dn, de) < COINCIDENT_TOL_M:
        raise DegenerateGeometryError("UAV and source positions coincide")
    return wrap_heading(math.degrees(math.atan2(de, dn)))


def relative_bearing(x: UavState, s: SourcePosition) -> float:
    """Bearing to the source minus UAV heading, wrapped to (-180, 180]."""
    return wrap_angle(bearing(x, s) - x.heading_deg)


def relative_bearing_array(north, east, heading_deg, cell_north, cell_east):
    """Relative bearings from one or more UAV states to many points.

    ``north``, ``east`` and ``heading_deg`` broadcast against the point
    arrays; pass ``(k, 1)`` shaped states with ``(m,)`` points to get a
    ``(k, m)`` result in (-180, 180]. Coincident pairs get 0.
    """
    dn = np.asarray(cell_north) - np.asarray(north)
    de = np.asarray(cell_east) - np.asarray(east)
    h = np.radians(np.asarray(heading_deg, dtype=float))
    ch, sh = np.cos(h), np.sin(h)
    # rotate the offset into the body frame (x forward, y right)
    rel = np.degrees(np.arctan2(de * ch - dn * sh, dn * ch + de * sh))
    rel = np.where(rel <= -180.0, rel + 360.0, rel)
    coincident = dn * dn + de * de < COINCIDENT_TOL_M * COINCIDENT_TOL_M
    if coincident.any():
        rel = np.where(coincident, 0.0, rel)
    return rel


def bearing_array(north, east, cell_north, cell_east):
    """Absolute bearings in [0, 360) from UAV position(s) to many points.

    Coincident pairs get bearing 0.
    """
    dn = np.asarray(cell_north) - np.asarray(north)
    de = np.asarray(cell_east) - np.asarray(east)
    b = np.mod(np.degrees(np.arctan2(de, dn)), 360.0)
    return np.where(b >= 360.0, 0.0, b)
