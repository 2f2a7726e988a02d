"""scikit-learn style wrappers around the histogram filter and log statistics.

``X`` rows are UAV states ``[north_m, east_m, heading_deg]`` in time order
and ``y`` holds the matching observations, so a flight log drops straight
into ``fit``::

    loc = FovLocalizer(cone_width_deg=120, mistake_rate=0.1).fit(X, z)
    loc.predict()          # [[north_m, east_m]] of the heaviest cell
    loc.predict_proba()    # (n, n) cell probabilities
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import belief as bl
from .geometry import UavState, relative_bearing_array
from .replay import LogRecord, empirical_stats
from .sensors import BearingModel, FovModel


class _HistogramLocalizer(BaseEstimator):
    def _model(self):
        raise NotImplementedError

    def _check_y(self, y):
        return y

    def _validate(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if X.shape[1] != 3:
            raise ValueError(f"X must have 3 columns (north, east, heading), got {X.shape[1]}")
        return X, self._check_y(y)

    def fit(self, X, y):
        """Filter the observation sequence from a uniform prior."""
        self.belief_ = bl.uniform_belief(self.area_side_m, self.cell_side_m)
        self.n_updates_ = 0
        return self.partial_fit(X, y)

    def partial_fit(self, X, y):
        """Continue filtering from the current belief."""
        X, y = self._validate(X, y)
        if not hasattr(self, "belief_"):
            self.belief_ = bl.uniform_belief(self.area_side_m, self.cell_side_m)
            self.n_updates_ = 0
        model = self._model()
        b = self.belief_
        for (north, east, heading), obs in zip(X, y):
            b = bl.bayes_update(b, model, UavState(north, east, heading), obs)
        self.belief_ = b
        self.n_updates_ += len(y)
        return self

    def predict_proba(self, X=None):
        check_is_fitted(self, "belief_")
        return np.array(self.belief_.weights)

    def predict(self, X=None):
        """MAP source position as a (1, 2) array of (north_m, east_m)."""
        check_is_fitted(self, "belief_")
        est = bl.map_estimate(self.belief_)
        return np.array([[est.north_m, est.east_m]])

    @property
    def entropy_(self):
        check_is_fitted(self, "belief_")
        return bl.entropy(self.belief_)

    @property
    def max_norm_(self):
        check_is_fitted(self, "belief_")
        return bl.max_norm(self.belief_)


class FovLocalizer(_HistogramLocalizer):
    """Histogram filter driven by binary front/rear antenna comparisons."""

    def __init__(self, area_side_m=200.0, cell_side_m=5.0, cone_width_deg=120.0, mistake_rate=0.1):
        self.area_side_m = area_side_m
        self.cell_side_m = cell_side_m
        self.cone_width_deg = cone_width_deg
        self.mistake_rate = mistake_rate

    def _model(self):
        return FovModel(self.cone_width_deg, self.mistake_rate)

    def _check_y(self, y):
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("FOV observations must be 0 or 1")
        return y.astype(int)


class BearingLocalizer(_HistogramLocalizer):
    """Histogram filter driven by noisy absolute bearings in degrees."""

    def __init__(self, area_side_m=200.0, cell_side_m=5.0, sigma_deg=5.0, quantized=True):
        self.area_side_m = area_side_m
        self.cell_side_m = cell_side_m
        self.sigma_deg = sigma_deg
        self.quantized = quantized

    def _model(self):
        return BearingModel(self.sigma_deg, 0.0, self.quantized)


class MistakeRateEstimator(BaseEstimator):
    """Estimate the FOV mistake rate and uncertainty-region z=1 fraction.

    ``X`` rows are ``[uav_north, uav_east, heading, src_north, src_east]``.
    """

    def __init__(self, cone_width_deg=120.0):
        self.cone_width_deg = cone_width_deg

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if X.shape[1] != 5:
            raise ValueError(f"X must have 5 columns, got {X.shape[1]}")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("observations must be 0 or 1")
        records = [
            LogRecord(float(i), *row, z=int(z)) for i, (row, z) in enumerate(zip(X, y))
        ]
        self.stats_ = empirical_stats(records, self.cone_width_deg)
        self.mistake_rate_ = self.stats_.mistake_rate_hat
        self.uncertainty_z1_frac_ = self.stats_.uncertainty_z1_frac
        return self

    def transform(self, X):
        """Region code per row: 1 front cone, -1 rear cone, 0 uncertainty."""
        X = check_array(X, dtype=float)
        if X.shape[1] != 5:
            raise ValueError(f"X must have 5 columns, got {X.shape[1]}")
        rel = relative_bearing_array(X[:, 0], X[:, 1], X[:, 2], X[:, 3], X[:, 4])
        return FovModel(self.cone_width_deg, 0.0).region_codes(rel).reshape(-1, 1)
