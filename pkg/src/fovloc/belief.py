"""Histogram filter over a square search area.

The area frame has its origin at the south-west corner; cell ``(r, c)``
spans north ``[r*cell, (r+1)*cell)`` and east ``[c*cell, (c+1)*cell)``.
Likelihoods are evaluated at cell centers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import entr

from .geometry import SourcePosition, UavState, relative_bearing_array
from .sensors import FovModel

NORMALIZATION_TOL = 1e-9


class ContradictionError(ValueError):
    """An observation has zero likelihood under every cell with mass."""


@dataclass(frozen=True, eq=False)
class GridBelief:
    area_side_m: float
    cell_side_m: float
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = _cells_per_side(self.area_side_m, self.cell_side_m)
        w = np.array(self.weights, dtype=float)
        if w.shape != (n, n):
            raise ValueError(f"weights must have shape {(n, n)}, got {w.shape}")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_per_side(self) -> int:
        return self.weights.shape[0]

    @property
    def n_cells(self) -> int:
        return self.weights.size

    @property
    def cell_centers(self):
        """Flat (north, east) arrays of cell centers in row-major order."""
        return cell_center_arrays(self.area_side_m, self.cell_side_m)

    @property
    def flat(self) -> np.ndarray:
        return self.weights.ravel()

    def with_weights(self, weights) -> "GridBelief":
        return GridBelief(self.area_side_m, self.cell_side_m, weights)

    def cell_center(self, row: int, col: int) -> SourcePosition:
        return SourcePosition((row + 0.5) * self.cell_side_m, (col + 0.5) * self.cell_side_m)

    def cell_of(self, north_m: float, east_m: float) -> tuple[int, int]:
        n = self.n_per_side
        r = min(max(int(math.floor(north_m / self.cell_side_m)), 0), n - 1)
        c = min(max(int(math.floor(east_m / self.cell_side_m)), 0), n - 1)
        return r, c


def _cells_per_side(area_side_m: float, cell_side_m: float) -> int:
    if not (area_side_m > 0 and cell_side_m > 0):
        raise ValueError("area and cell sides must be positive")
    ratio = area_side_m / cell_side_m
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(
            f"area side {area_side_m} is not an integer multiple of cell side {cell_side_m}"
        )
    return n


@lru_cache(maxsize=16)
def cell_center_arrays(area_side_m: float, cell_side_m: float):
    n = _cells_per_side(area_side_m, cell_side_m)
    idx = (np.arange(n) + 0.5) * cell_side_m
    north, east = np.meshgrid(idx, idx, indexing="ij")
    north, east = north.ravel(), east.ravel()
    north.setflags(write=False)
    east.setflags(write=False)
    return north, east


def uniform_belief(area_side_m: float = 200.0, cell_side_m: float = 5.0) -> GridBelief:
    n = _cells_per_side(area_side_m, cell_side_m)
    return GridBelief(area_side_m, cell_side_m, np.full((n, n), 1.0 / (n * n)))


def normalize(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0.0:
        raise ContradictionError("belief has no mass left after the update")
    return w / total


def likelihood_map(b: GridBelief, model, x: UavState, obs) -> np.ndarray:
    """P(obs | x, cell) for every cell, shaped like ``b.weights``."""
    cn, ce = b.cell_centers
    lik = model.likelihood(obs, x.north_m, x.east_m, x.heading_deg, cn, ce)
    return np.asarray(lik, dtype=float).reshape(b.weights.shape)


def bayes_update(b: GridBelief, model, x: UavState, obs) -> GridBelief:
    """Posterior after observing ``obs`` from state ``x``."""
    return b.with_weights(normalize(b.weights * likelihood_map(b, model, x, obs)))


def entropy(b: GridBelief) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    return float(entr(b.weights).sum())


def max_norm(b: GridBelief) -> float:
    return float(b.weights.max())


def map_estimate(b: GridBelief) -> SourcePosition:
    """Center of the heaviest cell; ties go to the lowest row-major index."""
    k = int(np.argmax(b.flat))
    r, c = divmod(k, b.n_per_side)
    return b.cell_center(r, c)


def predictive_obs_prob(b: GridBelief, model: FovModel, x_next: UavState, z) -> float:
    """P(z | x_next) marginalized over the belief."""
    cn, ce = b.cell_centers
    p1 = model.p_one(relative_bearing_array(x_next.north_m, x_next.east_m, x_next.heading_deg, cn, ce))
    p_one = min(max(float(np.dot(b.flat, p1)), 0.0), 1.0)
    if z == 1:
        return p_one
    if z == 0:
        return 1.0 - p_one
    raise ValueError(f"FOV observation must be 0 or 1, got {z!r}")


def write_belief_csv(b: GridBelief, path) -> None:
    """Dump a belief as (row, col, weight) rows for plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "north_m", "east_m", "weight"])
        cn, ce = b.cell_centers
        n = b.n_per_side
        for k, weight in enumerate(b.flat):
            r, c = divmod(k, n)
            w.writerow([r, c, repr(float(cn[k])), repr(float(ce[k])), repr(float(weight))])
