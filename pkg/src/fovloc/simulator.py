"""Single localization trials and seeded Monte-Carlo batches.

Random draw order inside a trial, all from ``numpy.random.default_rng(seed)``:

1. source cell index (one ``integers`` draw) unless the source is fixed;
2. per step: the random policy's action index (one ``integers`` draw, random
   policy only), then the observation (one ``random`` draw for FOV, one
   ``standard_normal`` draw for bearing sensors).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from . import belief as bl
from .geometry import COINCIDENT_TOL_M, SourcePosition, UavState, distance, wrap_heading
from .planner import (
    build_action_set,
    greedy_select,
    propagate,
    random_select,
    rfb_select_waypoint,
)
from .sensors import BearingModel, FovModel, fov_sample

SENSORS = ("fov", "ib", "rfb")
POLICIES = ("greedy", "random")
PLACEMENTS = ("cell", "uniform")
BEARING_FILTERS = ("binned", "continuous")

TRIAL_COLUMNS = (
    "seed", "policy", "sensor", "alpha_deg", "mu", "sigma_deg", "sample_rate_hz",
    "loc_time_s", "terminal_maxnorm", "err_m", "steps", "timed_out",
)
TRAJECTORY_COLUMNS = (
    "t_s", "uav_north_m", "uav_east_m", "heading_deg", "src_north_m", "src_east_m", "z",
)
SWEEP_COLUMNS = (
    "sweep", "sensor", "policy", "alpha_deg", "mu", "sample_rate_hz", "n_trials",
    "mean_s", "median_s", "std_s", "sem_s", "ci95_low_s", "ci95_high_s", "n_timeouts",
)


@dataclass(frozen=True)
class TrialConfig:
    seed: int = 0
    area_side_m: float = 200.0
    cell_side_m: float = 5.0
    sensor: str = "fov"
    policy: str = "greedy"
    cone_width_deg: float = 120.0
    mistake_rate: float = 0.1
    sigma_deg: float = 5.0
    rotation_time_s: float = 24.0
    sample_rate_hz: float = 1.0
    speed_mps: float = 5.0
    heading_rate_dps: float = 10.0
    maxnorm_threshold: float = 0.5
    timeout_s: float = 3600.0
    source: tuple[float, float] | None = None
    source_placement: str = "cell"
    bearing_filter: str = "binned"
    record_trajectory: bool = False

    def validate(self) -> "TrialConfig":
        n = bl._cells_per_side(self.area_side_m, self.cell_side_m)
        if self.sensor not in SENSORS:
            raise ValueError(f"sensor must be one of {SENSORS}, got {self.sensor!r}")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.sensor == "rfb" and self.policy != "greedy":
            raise ValueError("the rotate-for-bearing sensor only supports the greedy policy")
        if not (1.0 / (n * n) < self.maxnorm_threshold <= 1.0):
            raise ValueError(f"max-norm threshold must be in (1/{n * n}, 1]")
        if not self.timeout_s > 0:
            raise ValueError("timeout must be positive")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample rate must be positive")
        if not (self.speed_mps > 0 and self.heading_rate_dps >= 0):
            raise ValueError("speed must be positive and heading rate non-negative")
        if self.source_placement not in PLACEMENTS:
            raise ValueError(f"source placement must be one of {PLACEMENTS}")
        if self.bearing_filter not in BEARING_FILTERS:
            raise ValueError(f"bearing filter must be one of {BEARING_FILTERS}")
        if self.source is not None:
            sn, se = self.source
            if not (0 <= sn <= self.area_side_m and 0 <= se <= self.area_side_m):
                raise ValueError("fixed source must lie inside the search area")
        # every model parameter is checked, even ones the chosen sensor ignores
        FovModel(self.cone_width_deg, self.mistake_rate)
        BearingModel(self.sigma_deg, self.rotation_time_s)
        return self

    def sensor_model(self):
        if self.sensor == "fov":
            return FovModel(self.cone_width_deg, self.mistake_rate)
        rotation = self.rotation_time_s if self.sensor == "rfb" else 0.0
        return BearingModel(self.sigma_deg, rotation, self.bearing_filter == "binned")


@dataclass
class TrialResult:
    seed: int
    config: TrialConfig
    localization_time_s: float
    terminal_maxnorm: float
    estimate_error_m: float
    steps: int
    timed_out: bool
    source: SourcePosition
    maxnorm_trace: list = field(default_factory=list, repr=False)
    trajectory: list = field(default_factory=list, repr=False)
    belief: bl.GridBelief | None = field(default=None, repr=False)

    def csv_row(self) -> dict:
        c = self.config
        return {
            "seed": c.seed,
            "policy": c.policy,
            "sensor": c.sensor,
            "alpha_deg": _fmt(c.cone_width_deg),
            "mu": _fmt(c.mistake_rate),
            "sigma_deg": _fmt(c.sigma_deg),
            "sample_rate_hz": _fmt(c.sample_rate_hz),
            "loc_time_s": _fmt(self.localization_time_s),
            "terminal_maxnorm": _fmt(self.terminal_maxnorm),
            "err_m": _fmt(self.estimate_error_m),
            "steps": self.steps,
            "timed_out": int(self.timed_out),
        }


def _fmt(v: float) -> str:
    return repr(float(v))


def _bearing_obs(model: BearingModel, x: UavState, s: SourcePosition, rng) -> float:
    # coincident positions fall back to bearing 0, matching the filter's cell convention
    dn, de = s.north_m - x.north_m, s.east_m - x.east_m
    true = 0.0 if math.hypot(dn, de) < COINCIDENT_TOL_M else math.degrees(math.atan2(de, dn))
    return wrap_heading(true + model.sigma_deg * rng.standard_normal())


def _observe(model, x, s, rng):
    if isinstance(model, FovModel):
        return fov_sample(model, x, s, rng)
    return _bearing_obs(model, x, s, rng)


def _place_source(cfg: TrialConfig, b: bl.GridBelief, rng) -> SourcePosition:
    if cfg.source is not None:
        return SourcePosition(*cfg.source)
    if cfg.source_placement == "uniform":
        n, e = rng.random(2) * cfg.area_side_m
        return SourcePosition(n, e)
    k = int(rng.integers(b.n_cells))
    r, c = divmod(k, b.n_per_side)
    return b.cell_center(r, c)


def run_trial(cfg: TrialConfig, actions=None) -> TrialResult:
    """Run one localization episode.

    ``actions`` optionally scripts the controller: the i-th step uses
    ``actions[i]`` instead of the configured policy (FOV and IB only).
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    b = bl.uniform_belief(cfg.area_side_m, cfg.cell_side_m)
    source = _place_source(cfg, b, rng)
    x = UavState(cfg.area_side_m / 2.0, cfg.area_side_m / 2.0, 0.0)
    model = cfg.sensor_model()
    if cfg.sensor == "rfb":
        return _run_rfb(cfg, model, b, x, source, rng)
    return _run_stepped(cfg, model, b, x, source, rng, actions)


def _finish(cfg, b, source, t, steps, success, trace, traj):
    est = bl.map_estimate(b)
    return TrialResult(
        seed=cfg.seed,
        config=cfg,
        localization_time_s=t if success else cfg.timeout_s,
        terminal_maxnorm=bl.max_norm(b),
        estimate_error_m=math.hypot(est.north_m - source.north_m, est.east_m - source.east_m),
        steps=steps,
        timed_out=not success,
        source=source,
        maxnorm_trace=trace,
        trajectory=traj,
        belief=b,
    )


def _run_stepped(cfg, model, b, x, source, rng, script):
    dt = 1.0 / cfg.sample_rate_hz
    full_actions = build_action_set(cfg.speed_mps, cfg.heading_rate_dps)
    if isinstance(model, FovModel):
        greedy_actions = full_actions
    else:
        greedy_actions = build_action_set(cfg.speed_mps, with_heading=False)
    max_steps = int(math.floor(cfg.timeout_s * cfg.sample_rate_hz + 1e-9))
    thr = cfg.maxnorm_threshold
    trace = [(0.0, bl.max_norm(b))]
    traj = []
    k = 0
    success = bl.max_norm(b) >= thr
    while not success and k < max_steps:
        if script is not None:
            if k >= len(script):
                break
            u = script[k]
        elif cfg.policy == "random":
            u = random_select(rng, full_actions)
        else:
            u = greedy_select(b, x, model, dt, greedy_actions)
        x = propagate(x, u, dt, cfg.area_side_m)
        obs = _observe(model, x, source, rng)
        b = bl.bayes_update(b, model, x, obs)
        k += 1
        t = k / cfg.sample_rate_hz
        mn = bl.max_norm(b)
        trace.append((t, mn))
        if cfg.record_trajectory:
            traj.append((t, x, obs))
        success = mn >= thr
    return _finish(cfg, b, source, k / cfg.sample_rate_hz, k, success, trace, traj)


def _run_rfb(cfg, model, b, x, source, rng):
    thr = cfg.maxnorm_threshold
    t = 0.0
    steps = 0
    trace = [(0.0, bl.max_norm(b))]
    traj = []
    success = bl.max_norm(b) >= thr
    while not success:
        wp = rfb_select_waypoint(b, x, model)
        t_meas = t + distance(x, wp) / cfg.speed_mps + model.rotation_time_s
        if t_meas > cfg.timeout_s:
            break
        x = UavState(wp.north_m, wp.east_m, x.heading_deg)
        obs = _observe(model, x, source, rng)
        b = bl.bayes_update(b, model, x, obs)
        steps += 1
        t = t_meas
        mn = bl.max_norm(b)
        trace.append((t, mn))
        if cfg.record_trajectory:
            traj.append((t, x, obs))
        success = mn >= thr
    return _finish(cfg, b, source, t, steps, success, trace, traj)


@dataclass(frozen=True)
class BatchSummary:
    n_trials: int
    mean_s: float
    median_s: float
    std_s: float
    sem_s: float
    ci95_low_s: float
    ci95_high_s: float
    n_timeouts: int

    @classmethod
    def from_times(cls, times, timed_out) -> "BatchSummary":
        t = np.asarray(times, dtype=float)
        n = t.size
        if n < 1:
            raise ValueError("need at least one trial")
        mean = float(t.mean())
        std = float(t.std(ddof=1)) if n > 1 else 0.0
        sem = std / math.sqrt(n)
        half = float(stats.t.ppf(0.975, n - 1)) * sem if n > 1 else 0.0
        return cls(n, mean, float(np.median(t)), std, sem, mean - half, mean + half,
                   int(np.sum(timed_out)))


@dataclass
class BatchResult:
    summary: BatchSummary
    trials: list

    def rows(self):
        return [r.csv_row() for r in self.trials]


def trial_configs(cfg: TrialConfig, n_trials: int):
    return [replace(cfg, seed=cfg.seed + i) for i in range(n_trials)]


def run_batch(cfg: TrialConfig, n_trials: int, jobs: int = 1) -> BatchResult:
    """Run trials with seeds ``cfg.seed + i``; results do not depend on ``jobs``."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    cfg.validate()
    cfgs = trial_configs(cfg, n_trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(run_trial, cfgs, chunksize=max(1, n_trials // (4 * jobs))))
    else:
        trials = [run_trial(c) for c in cfgs]
    summary = BatchSummary.from_times(
        [r.localization_time_s for r in trials], [r.timed_out for r in trials]
    )
    return BatchResult(summary, trials)


def _sweep_row(kind, cfg: TrialConfig, s: BatchSummary) -> dict:
    row = {
        "sweep": kind,
        "sensor": cfg.sensor,
        "policy": cfg.policy,
        "alpha_deg": _fmt(cfg.cone_width_deg),
        "mu": _fmt(cfg.mistake_rate),
        "sample_rate_hz": _fmt(cfg.sample_rate_hz),
    }
    for k, v in asdict(s).items():
        row[k] = v if isinstance(v, int) else _fmt(v)
    return row


def sweep_cone_width(base_cfg: TrialConfig, alphas, mus, n_trials: int, jobs: int = 1):
    """One batch per (mu, alpha) pair, mu outer. Returns (config, summary) pairs."""
    for a in alphas:
        if not 0 < a <= 180:
            raise ValueError(f"cone width must be in (0, 180], got {a}")
    out = []
    for mu in mus:
        for a in alphas:
            cfg = replace(base_cfg, cone_width_deg=float(a), mistake_rate=float(mu))
            out.append((cfg, run_batch(cfg, n_trials, jobs).summary))
    return out


def sweep_sample_rate(base_cfg: TrialConfig, rates_hz, n_trials: int, jobs: int = 1):
    for r in rates_hz:
        if not r > 0:
            raise ValueError(f"sample rate must be positive, got {r}")
    out = []
    for r in rates_hz:
        cfg = replace(base_cfg, sample_rate_hz=float(r))
        out.append((cfg, run_batch(cfg, n_trials, jobs).summary))
    return out


def write_trials_csv(rows, path) -> None:
    _write_rows(rows, TRIAL_COLUMNS, path)


def write_sweep_csv(kind, results, path) -> None:
    _write_rows([_sweep_row(kind, c, s) for c, s in results], SWEEP_COLUMNS, path)


def write_trajectory_csv(result: TrialResult, path) -> None:
    """Trajectory in the replay log schema; bearing sensors put the bearing in ``z``."""
    s = result.source
    rows = [
        {
            "t_s": _fmt(t),
            "uav_north_m": _fmt(x.north_m),
            "uav_east_m": _fmt(x.east_m),
            "heading_deg": _fmt(x.heading_deg),
            "src_north_m": _fmt(s.north_m),
            "src_east_m": _fmt(s.east_m),
            "z": obs if isinstance(obs, int) else _fmt(obs),
        }
        for t, x, obs in result.trajectory
    ]
    _write_rows(rows, TRAJECTORY_COLUMNS, path)


def _write_rows(rows, columns, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
