"""Empirical FOV sensor statistics from flight-style logs.

A log is a CSV with header
``t_s,uav_north_m,uav_east_m,heading_deg,src_north_m,src_east_m,z`` and an
optional ``tag`` column (e.g. transmitter name). Simulator trajectory files
use the same schema.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass

from .geometry import COINCIDENT_TOL_M, SourcePosition, UavState, distance, relative_bearing
from .sensors import FRONT_CONE, REAR_CONE, UNCERTAINTY, classify_relative_bearing

LOG_COLUMNS = ("t_s", "uav_north_m", "uav_east_m", "heading_deg", "src_north_m", "src_east_m", "z")
STATS_COLUMNS = (
    "in_cone_total", "in_cone_correct", "uncertainty_total", "uncertainty_z1",
    "mistake_rate_hat", "uncertainty_z1_frac",
)


class LogFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LogRecord:
    t_s: float
    uav_north_m: float
    uav_east_m: float
    heading_deg: float
    src_north_m: float
    src_east_m: float
    z: int
    tag: str = ""

    @property
    def uav(self) -> UavState:
        return UavState(self.uav_north_m, self.uav_east_m, self.heading_deg)

    @property
    def source(self) -> SourcePosition:
        return SourcePosition(self.src_north_m, self.src_east_m)


@dataclass(frozen=True)
class EmpiricalStats:
    in_cone_total: int
    in_cone_correct: int
    uncertainty_total: int
    uncertainty_z1: int

    @property
    def mistake_rate_hat(self) -> float | None:
        """Fraction of in-cone readings naming the wrong cone; None if no such readings."""
        if self.in_cone_total == 0:
            return None
        return 1.0 - self.in_cone_correct / self.in_cone_total

    @property
    def uncertainty_z1_frac(self) -> float | None:
        if self.uncertainty_total == 0:
            return None
        return self.uncertainty_z1 / self.uncertainty_total

    def as_row(self) -> dict:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return {
            "in_cone_total": self.in_cone_total,
            "in_cone_correct": self.in_cone_correct,
            "uncertainty_total": self.uncertainty_total,
            "uncertainty_z1": self.uncertainty_z1,
            "mistake_rate_hat": fmt(self.mistake_rate_hat),
            "uncertainty_z1_frac": fmt(self.uncertainty_z1_frac),
        }

    def report(self) -> str:
        def fmt(v):
            return "undefined" if v is None else f"{v:.4f}"

        return "\n".join([
            f"in-cone observations:      {self.in_cone_total}",
            f"  matching the cone:       {self.in_cone_correct}",
            f"  mistake rate estimate:   {fmt(self.mistake_rate_hat)}",
            f"uncertainty observations:  {self.uncertainty_total}",
            f"  with z=1:                {self.uncertainty_z1}",
            f"  fraction z=1:            {fmt(self.uncertainty_z1_frac)}",
        ])


def _parse_float(text, name, lineno):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise LogFormatError(f"line {lineno}: {name}={text!r} is not a number") from None
    if not math.isfinite(v):
        raise LogFormatError(f"line {lineno}: {name}={text!r} is not finite")
    return v


def load_log(path) -> list[LogRecord]:
    """Parse a log file; errors name the offending line (header is line 1)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in LOG_COLUMNS if c not in header]
        if missing:
            raise LogFormatError(f"{path}: missing columns {', '.join(missing)}")
        records = []
        last_t = -math.inf
        for lineno, row in enumerate(reader, start=2):
            vals = {c: _parse_float(row[c], c, lineno) for c in LOG_COLUMNS if c != "z"}
            z_text = (row["z"] or "").strip()
            if z_text not in ("0", "1"):
                raise LogFormatError(f"line {lineno}: z={z_text!r} must be 0 or 1")
            if vals["t_s"] < last_t:
                raise LogFormatError(f"line {lineno}: timestamp {vals['t_s']} decreases")
            last_t = vals["t_s"]
            records.append(LogRecord(z=int(z_text), tag=(row.get("tag") or ""), **vals))
    return records


def classify(record: LogRecord, alpha_deg: float) -> str:
    """front_cone, rear_cone or uncertainty for the record's geometry."""
    if not 0.0 < alpha_deg <= 180.0:
        raise ValueError(f"cone width must be in (0, 180], got {alpha_deg}")
    x, s = record.uav, record.source
    delta = 0.0 if distance(x, s) < COINCIDENT_TOL_M else relative_bearing(x, s)
    return classify_relative_bearing(delta, alpha_deg)


def empirical_stats(records, alpha_deg: float) -> EmpiricalStats:
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    cone = correct = unc = unc_one = 0
    for r in records:
        region = classify(r, alpha_deg)
        if region == UNCERTAINTY:
            unc += 1
            unc_one += r.z
        else:
            cone += 1
            correct += (region == FRONT_CONE and r.z == 1) or (region == REAR_CONE and r.z == 0)
    return EmpiricalStats(cone, correct, unc, unc_one)


def stats_by_tag(records, alpha_deg: float) -> dict[str, EmpiricalStats]:
    groups = defaultdict(list)
    for r in records:
        groups[r.tag].append(r)
    return {tag: empirical_stats(rs, alpha_deg) for tag, rs in sorted(groups.items())}


def write_stats_csv(stats: EmpiricalStats, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(STATS_COLUMNS), lineterminator="\n")
        w.writeheader()
        w.writerow(stats.as_row())
