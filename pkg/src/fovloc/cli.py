"""Command-line front end.

    fovloc simulate --sensor fov --policy greedy --trials 1000 --out runs/fov.csv
    fovloc sweep cone --alphas 120,140,160,180 --mus 0.10,0.05,0.01 --out cone.csv
    fovloc sweep rate --rates 1,2,3,4,5,7,10,20 --out rate.csv
    fovloc replay --log flight.csv --alpha 120
    fovloc dump-config

Settings come from defaults, then an optional ``--config`` file of
``key=value`` lines, then flags. Exit codes: 0 success, 1 runtime error,
2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields, replace

from . import belief as bl
from .replay import LogFormatError, empirical_stats, load_log, stats_by_tag, write_stats_csv
from .simulator import (
    BEARING_FILTERS,
    PLACEMENTS,
    POLICIES,
    SENSORS,
    TrialConfig,
    run_batch,
    sweep_cone_width,
    sweep_sample_rate,
    write_sweep_csv,
    write_trajectory_csv,
    write_trials_csv,
)

# (flag, config key, type, help)
TRIAL_OPTIONS = [
    ("--sensor", "sensor", str, "fov | ib | rfb"),
    ("--policy", "policy", str, "greedy | random"),
    ("--area", "area_side_m", float, "search area side, m"),
    ("--cell", "cell_side_m", float, "grid cell side, m"),
    ("--alpha", "cone_width_deg", float, "FOV cone width, degrees"),
    ("--mu", "mistake_rate", float, "FOV mistake rate"),
    ("--sigma", "sigma_deg", float, "bearing noise std, degrees"),
    ("--rotation-time", "rotation_time_s", float, "RFB rotation time, s"),
    ("--rate", "sample_rate_hz", float, "measurement rate, Hz"),
    ("--speed", "speed_mps", float, "planar speed, m/s"),
    ("--heading-rate", "heading_rate_dps", float, "heading rate, deg/s"),
    ("--threshold", "maxnorm_threshold", float, "max-norm for localization"),
    ("--timeout", "timeout_s", float, "trial timeout, s"),
    ("--source-placement", "source_placement", str, "cell | uniform"),
    ("--bearing-filter", "bearing_filter", str, "binned | continuous"),
]
RUN_OPTIONS = [
    ("--seed", "seed", int, "batch seed; trial i uses seed + i"),
    ("--trials", "trials", int, "trials per batch"),
    ("--jobs", "jobs", int, "worker processes"),
]
RUN_DEFAULTS = {"seed": 0, "trials": 1000, "jobs": 1}
CONFIG_KEYS = [k for _, k, _, _ in TRIAL_OPTIONS + RUN_OPTIONS]


class UsageError(Exception):
    pass


def default_config() -> dict:
    cfg = {f.name: f.default for f in fields(TrialConfig) if f.name in CONFIG_KEYS}
    cfg.update(RUN_DEFAULTS)
    return cfg


def read_config_file(path) -> dict:
    types = {k: t for _, k, t, _ in TRIAL_OPTIONS + RUN_OPTIONS}
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in types:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = types[key](value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_options(p, options):
    for flag, key, typ, help_ in options:
        p.add_argument(flag, dest=key, type=typ, default=None, help=help_)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fovloc", description="FOV RF-source localization simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file; flags override it")
    _add_options(common, TRIAL_OPTIONS + RUN_OPTIONS)

    sim = sub.add_parser("simulate", parents=[common], help="run a Monte-Carlo batch")
    sim.add_argument("--out", default="trials.csv", help="per-trial CSV path")
    sim.add_argument("--trajectory-dir", help="write one trajectory CSV per trial here")
    sim.add_argument("--belief-dir", help="write each trial's final belief CSV here")

    sweep = sub.add_parser("sweep", help="parameter sweeps")
    kinds = sweep.add_subparsers(dest="kind", required=True)
    cone = kinds.add_parser("cone", parents=[common], help="cone width x mistake rate")
    cone.add_argument("--alphas", type=_float_list, default=[120.0, 140.0, 160.0, 180.0])
    cone.add_argument("--mus", type=_float_list, default=[0.10, 0.05, 0.01])
    cone.add_argument("--out", default="sweep_cone.csv")
    rate = kinds.add_parser("rate", parents=[common], help="measurement sample rate")
    rate.add_argument("--rates", type=_float_list, default=[1, 2, 3, 4, 5, 7, 10, 20])
    rate.add_argument("--out", default="sweep_rate.csv")

    rep = sub.add_parser("replay", help="empirical sensor statistics from a log")
    rep.add_argument("--log", required=True)
    rep.add_argument("--alpha", type=float, default=120.0)
    rep.add_argument("--out", help="write the statistics as a one-row CSV")
    rep.add_argument("--by-tag", action="store_true", help="also report per tag column value")

    sub.add_parser("dump-config", parents=[common], help="print effective settings")
    return parser


def resolve_config(args) -> dict:
    cfg = default_config()
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def make_trial_config(cfg: dict) -> TrialConfig:
    if cfg["sensor"] not in SENSORS:
        raise UsageError(f"--sensor must be one of {', '.join(SENSORS)}")
    if cfg["policy"] not in POLICIES:
        raise UsageError(f"--policy must be one of {', '.join(POLICIES)}")
    if cfg["source_placement"] not in PLACEMENTS:
        raise UsageError(f"--source-placement must be one of {', '.join(PLACEMENTS)}")
    if cfg["bearing_filter"] not in BEARING_FILTERS:
        raise UsageError(f"--bearing-filter must be one of {', '.join(BEARING_FILTERS)}")
    if cfg["trials"] < 1:
        raise UsageError("--trials must be at least 1")
    if cfg["jobs"] < 1:
        raise UsageError("--jobs must be at least 1")
    trial_keys = {f.name for f in fields(TrialConfig)}
    tc = TrialConfig(**{k: v for k, v in cfg.items() if k in trial_keys})
    try:
        tc.validate()
    except ValueError as e:
        raise UsageError(str(e)) from None
    return tc


def _print_summary(label, s):
    print(
        f"{label} n={s.n_trials} mean_s={s.mean_s:.3f} median_s={s.median_s:.3f} "
        f"std_s={s.std_s:.3f} ci95=[{s.ci95_low_s:.3f}, {s.ci95_high_s:.3f}] "
        f"timeouts={s.n_timeouts}"
    )


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def cmd_simulate(args, cfg):
    tc = make_trial_config(cfg)
    if args.trajectory_dir:
        tc = replace(tc, record_trajectory=True)
    result = run_batch(tc, cfg["trials"], cfg["jobs"])
    _ensure_parent(args.out)
    write_trials_csv(result.rows(), args.out)
    for sub, write in ((args.trajectory_dir, write_trajectory_csv), (args.belief_dir, None)):
        if not sub:
            continue
        os.makedirs(sub, exist_ok=True)
        for r in result.trials:
            if write is not None:
                write(r, os.path.join(sub, f"trajectory_{r.seed}.csv"))
            else:
                bl.write_belief_csv(r.belief, os.path.join(sub, f"belief_{r.seed}.csv"))
    _print_summary(f"{tc.sensor}-{tc.policy}", result.summary)
    return 0


def cmd_sweep(args, cfg):
    tc = make_trial_config(cfg)
    if args.kind == "cone":
        for a in args.alphas:
            if not 0 < a <= 180:
                raise UsageError(f"cone widths must be in (0, 180], got {a}")
        for m in args.mus:
            if not 0 <= m < 0.5:
                raise UsageError(f"mistake rates must be in [0, 0.5), got {m}")
        results = sweep_cone_width(tc, args.alphas, args.mus, cfg["trials"], cfg["jobs"])
        label = lambda c: f"alpha={c.cone_width_deg:g} mu={c.mistake_rate:g}"  # noqa: E731
    else:
        for r in args.rates:
            if not r > 0:
                raise UsageError(f"rates must be positive, got {r}")
        results = sweep_sample_rate(tc, args.rates, cfg["trials"], cfg["jobs"])
        label = lambda c: f"rate={c.sample_rate_hz:g}Hz"  # noqa: E731
    _ensure_parent(args.out)
    write_sweep_csv(args.kind, results, args.out)
    for c, s in results:
        _print_summary(label(c), s)
    return 0


def cmd_replay(args):
    if not 0 < args.alpha <= 180:
        raise UsageError(f"--alpha must be in (0, 180], got {args.alpha}")
    records = load_log(args.log)
    if not records:
        print("log contains no records", file=sys.stderr)
        return 1
    stats = empirical_stats(records, args.alpha)
    print(stats.report())
    if args.by_tag:
        for tag, s in stats_by_tag(records, args.alpha).items():
            print(f"\n[tag {tag or '(none)'}]")
            print(s.report())
    if args.out:
        _ensure_parent(args.out)
        write_stats_csv(stats, args.out)
    return 0


def cmd_dump_config(cfg):
    for key in CONFIG_KEYS:
        print(f"{key}={cfg[key]}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return cmd_replay(args)
        cfg = resolve_config(args)
        if args.command == "dump-config":
            make_trial_config(cfg)
            return cmd_dump_config(cfg)
        if args.command == "simulate":
            return cmd_simulate(args, cfg)
        return cmd_sweep(args, cfg)
    except UsageError as e:
        parser.error(str(e))
    except (OSError, LogFormatError, ValueError) as e:
        print(f"fovloc: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
