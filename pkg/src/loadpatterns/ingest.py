"""Parsing and validation of raw hourly smart-meter CSV data.

Input schema: ``household_id,timestamp,energy_kwh`` with timestamps on
the hour (``YYYY-MM-DDThh:00``). Malformed rows are logged, never
silently dropped; duplicate (household, date, hour) readings keep the
first occurrence; days without all 24 distinct hours are discarded.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

EXPECTED_HEADER = ["household_id", "timestamp", "energy_kwh"]


class IngestError(Exception):
    """Unreadable stream or missing/incorrect header."""


class DayType(str, Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"


def day_type_of(date: dt.date) -> DayType:
    # ISO weekday: Saturday=6, Sunday=7
    return DayType.WEEKEND if date.isoweekday() >= 6 else DayType.WEEKDAY


@dataclass(frozen=True)
class MeterReading:
    household_id: str
    date: dt.date
    hour: int
    energy_kwh: float


@dataclass(frozen=True)
class LoadProfile:
    """One household-day of 24 hourly kWh readings.

    ``day_type`` is derived from the date, so it cannot disagree with
    the calendar.
    """

    household_id: str
    date: dt.date
    values: np.ndarray
    day_type: DayType = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (24,):
            raise ValueError(f"profile needs exactly 24 values, got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("profile values must be finite and non-negative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "day_type", day_type_of(self.date))


@dataclass(frozen=True)
class DatasetSummary:
    n_households: int
    n_profiles: int
    n_rejected_rows: int
    date_range: tuple[dt.date, dt.date] | None


@dataclass
class RejectionLog:
    """Everything that did not make it into a profile, and why."""

    rows: list[tuple[int, str]] = field(default_factory=list)
    duplicates: list[tuple[str, dt.date, int]] = field(default_factory=list)
    incomplete_days: list[tuple[str, dt.date, int]] = field(default_factory=list)


def _parse_timestamp(text: str) -> tuple[dt.date, int] | str:
    """Return (date, hour) or a rejection reason string."""
    if len(text) != 16 or text[10] != "T" or text[13] != ":":
        return "bad timestamp"
    try:
        date = dt.date.fromisoformat(text[:10])
        hour = int(text[11:13])
        minute = int(text[14:16])
    except ValueError:
        return "bad timestamp"
    if minute != 0:
        return "non-hourly timestamp"
    if not 0 <= hour <= 23:
        return "bad timestamp"
    return date, hour


def parse_readings(stream, log: RejectionLog | None = None):
    """Parse a readings CSV stream into MeterReadings plus a rejection log.

    ``stream`` may be a path (str/PathLike), a text or binary file
    object, or raw bytes. Rejected rows are recorded as (physical line
    number, reason); the header is line 1.
    """
    if log is None:
        log = RejectionLog()
    close = False
    if isinstance(stream, (str, os.PathLike)):
        try:
            fh = open(stream, "r", newline="", encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot open readings CSV: {exc}") from exc
        close = True
    elif isinstance(stream, bytes):
        fh = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, (io.RawIOBase, io.BufferedIOBase)):
        fh = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    else:
        fh = stream

    readings: list[MeterReading] = []
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader, None)
        except (UnicodeDecodeError, csv.Error) as exc:
            raise IngestError(f"unreadable CSV stream: {exc}") from exc
        if header is None:
            raise IngestError("empty stream: missing header")
        if [h.strip() for h in header] != EXPECTED_HEADER:
            raise IngestError(
                f"missing or bad header: expected {','.join(EXPECTED_HEADER)}"
            )
        hid_cache: dict[str, str] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                log.rows.append((line_no, "wrong field count"))
                continue
            parsed = _parse_timestamp(row[1])
            if isinstance(parsed, str):
                log.rows.append((line_no, parsed))
                continue
            try:
                kwh = float(row[2])
            except ValueError:
                log.rows.append((line_no, "bad number"))
                continue
            if not np.isfinite(kwh):
                log.rows.append((line_no, "non-finite energy"))
                continue
            if kwh < 0:
                log.rows.append((line_no, "negative energy"))
                continue
            hid = hid_cache.setdefault(row[0], row[0])
            readings.append(MeterReading(hid, parsed[0], parsed[1], kwh))
    except UnicodeDecodeError as exc:
        raise IngestError(f"stream is not valid UTF-8: {exc}") from exc
    finally:
        if close:
            fh.close()
    return readings, log


def assemble_profiles(readings, log: RejectionLog | None = None):
    """Group readings into complete daily profiles.

    Duplicate (household, date, hour) readings keep the first occurrence
    and log the rest; (household, date) groups without all 24 hours are
    discarded, their retained rows counted as rejected. The summary's
    rejected count covers parse-time rejections already in ``log`` plus
    the discarded incomplete-day rows.
    """
    if log is None:
        log = RejectionLog()
    groups: dict[tuple[str, dt.date], dict[int, float]] = {}
    for r in readings:
        key = (r.household_id, r.date)
        hours = groups.setdefault(key, {})
        if r.hour in hours:
            log.duplicates.append((r.household_id, r.date, r.hour))
        else:
            hours[r.hour] = r.energy_kwh

    profiles: list[LoadProfile] = []
    incomplete_rows = 0
    for (hid, date), hours in groups.items():
        if len(hours) != 24:
            log.incomplete_days.append((hid, date, len(hours)))
            incomplete_rows += len(hours)
            continue
        values = np.array([hours[h] for h in range(24)])
        profiles.append(LoadProfile(hid, date, values))

    if profiles:
        dates = [p.date for p in profiles]
        date_range = (min(dates), max(dates))
    else:
        date_range = None
    summary = DatasetSummary(
        n_households=len({p.household_id for p in profiles}),
        n_profiles=len(profiles),
        n_rejected_rows=len(log.rows) + incomplete_rows,
        date_range=date_range,
    )
    return profiles, summary


def ingest_csv(stream):
    """parse_readings + assemble_profiles with one shared log."""
    readings, log = parse_readings(stream)
    profiles, summary = assemble_profiles(readings, log)
    return profiles, summary, log


def split_by_daytype(profiles):
    """Exact partition into (weekday, weekend), order preserved."""
    weekday = [p for p in profiles if p.day_type is DayType.WEEKDAY]
    weekend = [p for p in profiles if p.day_type is DayType.WEEKEND]
    return weekday, weekend


def profile_csv_rows(profiles):
    """Readings-schema rows for profiles; kWh via repr so values
    round-trip bit-exactly."""
    for p in profiles:
        day = p.date.isoformat()
        for hour, kwh in enumerate(p.values):
            yield [p.household_id, f"{day}T{hour:02d}:00", repr(float(kwh))]


def write_profiles_csv(profiles, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EXPECTED_HEADER)
        w.writerows(profile_csv_rows(profiles))


def write_rejection_csv(log: RejectionLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "reason"])
        for row, reason in log.rows:
            w.writerow([str(row), reason])


def summary_to_json(summary: DatasetSummary) -> str:
    payload = {
        "n_households": summary.n_households,
        "n_profiles": summary.n_profiles,
        "n_rejected_rows": summary.n_rejected_rows,
        "date_range": (
            [summary.date_range[0].isoformat(), summary.date_range[1].isoformat()]
            if summary.date_range
            else None
        ),
    }
    return json.dumps(payload, indent=2) + "\n"
