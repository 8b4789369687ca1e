"""UCI Bike Sharing ``hour.csv`` loader and the Saturday temperature dataset."""

from __future__ import annotations

import csv
import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import EmptyDatasetError, InvalidArgumentError, SchemaError
from .funcspace import CurveSet, Grid

REQUIRED_COLUMNS = ("dteday", "hr", "weekday", "temp", "cnt")
SATURDAY = 6  # UCI weekday coding: 0 = Sunday


@dataclass(frozen=True)
class HourRecord:
    date: dt.date
    hour: int
    temp_normalized: float
    count: int
    weekday: int


@dataclass
class ParseReport:
    rejected: List[Tuple[int, str]] = field(default_factory=list)


@dataclass
class SaturdayReport:
    retained: List[dt.date] = field(default_factory=list)
    excluded: List[Tuple[dt.date, str]] = field(default_factory=list)


def _parse_row(row: dict) -> HourRecord:
    date = dt.date.fromisoformat(row["dteday"].strip())
    hour = int(row["hr"])
    weekday = int(row["weekday"])
    temp = float(row["temp"])
    count = int(row["cnt"])
    if not 0 <= hour <= 23:
        raise ValueError(f"hour {hour} outside 0..23")
    if not 0 <= weekday <= 6:
        raise ValueError(f"weekday {weekday} outside 0..6")
    if not math.isfinite(temp) or not 0.0 <= temp <= 1.0:
        raise ValueError(f"normalized temperature {temp} outside [0, 1]")
    if count < 0:
        raise ValueError(f"negative count {count}")
    return HourRecord(date, hour, temp, count, weekday)


def parse_bike_csv(path) -> Tuple[List[HourRecord], ParseReport]:
    """Parse ``hour.csv``; bad rows are skipped and listed by file line number."""
    records: List[HourRecord] = []
    report = ParseReport()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing required columns {missing}")
        for row in reader:
            try:
                records.append(_parse_row(row))
            except (ValueError, TypeError, AttributeError) as exc:
                report.rejected.append((reader.line_num, str(exc)))
    return records, report


def build_saturday_dataset(
    records: List[HourRecord], grid: Grid, max_missing_hours: int = 0
) -> Tuple[CurveSet, np.ndarray, SaturdayReport]:
    """Temperature curves and log mean rentals for complete Saturdays.

    Hour ``h`` sits at ``t = h / 23``; the hourly temperatures are linearly
    interpolated onto ``grid``. The response is ``log`` of the day's mean
    hourly count. Days are returned sorted by date.
    """
    if not records:
        raise InvalidArgumentError("no records")
    if max_missing_hours < 0:
        raise InvalidArgumentError("max_missing_hours must be nonnegative")
    days = defaultdict(list)
    for r in records:
        if r.weekday == SATURDAY:
            days[r.date].append(r)
    report = SaturdayReport()
    curves, responses = [], []
    for date in sorted(days):
        rows = days[date]
        hours = [r.hour for r in rows]
        if len(set(hours)) != len(hours):
            report.excluded.append((date, "duplicate hour rows"))
            continue
        missing = sorted(set(range(24)) - set(hours))
        if len(missing) > max_missing_hours:
            report.excluded.append((date, f"missing hours {missing}"))
            continue
        rows = sorted(rows, key=lambda r: r.hour)
        counts = np.array([r.count for r in rows], dtype=float)
        if counts.sum() <= 0:
            report.excluded.append((date, "zero total count"))
            continue
        t = np.array([r.hour for r in rows], dtype=float) / 23.0
        temp = np.array([r.temp_normalized for r in rows])
        curves.append(np.interp(grid.points, t, temp))
        responses.append(math.log(counts.mean()))
        report.retained.append(date)
    if not curves:
        raise EmptyDatasetError("no Saturday passed the completeness filter")
    return CurveSet(grid, np.stack(curves)), np.array(responses)[:, None], report


def write_saturday_csv(X: CurveSet, Y: np.ndarray, report: SaturdayReport, path) -> None:
    """One row per retained Saturday: date, curve values on the grid, response."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + [f"temp({float(t)!r})" for t in X.grid.points] + ["log_mean_count"])
        for day, row, y in zip(report.retained, X.values, Y[:, 0]):
            w.writerow([day.isoformat()] + [repr(float(v)) for v in row] + [repr(float(y))])
