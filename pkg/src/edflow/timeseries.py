"""Census and per-acuity arrival series on the 15-minute tick grid.

Boundary conventions, fixed once so every downstream test is deterministic:

* census_at(t) counts a patient arriving exactly at t, and does not count
  one departing exactly at t.
* arrival windows are half-open (t1, t2]; the bucket stored at tick t
  covers the 15 minutes ending at t.

Together these give the balance identity
census(t) = census(t-1) + arrivals(t) - departures(t) on the capped record
set, with the arrival/departure buckets sharing the (t-15, t] convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import TextIO

import numpy as np

from .records import AcuityGroup, format_timestamp

TICK_MINUTES = 15
TICK = timedelta(minutes=TICK_MINUTES)
TICKS_PER_HOUR = 4
TICKS_PER_DAY = 96
TICKS_PER_WEEK = 7 * TICKS_PER_DAY

#: Row order of the arrivals matrix in SeriesFrame.
GROUP_ORDER = (AcuityGroup.EMERGENT, AcuityGroup.URGENT, AcuityGroup.NONURGENT)

FRAME_CSV_HEADER = ["timestamp", "census", "arrivals_emergent", "arrivals_urgent", "arrivals_nonurgent"]


@dataclass(frozen=True)
class TickIndex:
    ordinal: int
    timestamp: datetime


@dataclass(frozen=True)
class TickGrid:
    """Bijection between tick ordinals and grid timestamps, anchored at an epoch."""

    epoch: datetime

    def __post_init__(self):
        if self.epoch.minute % TICK_MINUTES or self.epoch.second or self.epoch.microsecond:
            raise ValueError("grid epoch must sit on a 15-minute boundary")

    def tick(self, ordinal: int) -> TickIndex:
        return TickIndex(ordinal, self.epoch + ordinal * TICK)

    def at(self, ts: datetime) -> TickIndex:
        delta = ts - self.epoch
        minutes = delta.days * 1440 + delta.seconds // 60
        if delta.seconds % 60 or delta.microseconds or minutes % TICK_MINUTES:
            raise ValueError(f"{ts} is not on the 15-minute grid of {self.epoch}")
        return TickIndex(minutes // TICK_MINUTES, ts)

    def floor(self, ts: datetime) -> TickIndex:
        delta = ts - self.epoch
        minutes = delta.days * 1440 + delta.seconds // 60
        return self.tick(minutes // TICK_MINUTES)


def census_at(snapshot, t: TickIndex) -> int:
    """Patients present at t: arrived at or before t, effective departure after t."""
    arrays = snapshot.arrays()
    t64 = np.datetime64(t.timestamp, "m")
    arrived = np.searchsorted(arrays["arrivals"], t64, side="right")
    departed = np.searchsorted(arrays["departures"], t64, side="right")
    return int(arrived - departed)


def arrivals_in(snapshot, group: AcuityGroup, t1: TickIndex, t2: TickIndex) -> int:
    """Arrivals with ESI in `group` inside the half-open window (t1, t2]."""
    if t1.ordinal >= t2.ordinal:
        raise ValueError("arrivals window requires t1 < t2")
    times = snapshot.arrays()["group_arrivals"][group]
    lo = np.searchsorted(times, np.datetime64(t1.timestamp, "m"), side="right")
    hi = np.searchsorted(times, np.datetime64(t2.timestamp, "m"), side="right")
    return int(hi - lo)


@dataclass(frozen=True)
class SeriesFrame:
    """Aligned census and per-group arrival series over a contiguous tick range."""

    grid: TickGrid
    start: int  # ordinal of the first tick
    census: np.ndarray  # int64 (n,)
    arrivals: np.ndarray  # int64 (len(GROUP_ORDER), n)

    def __post_init__(self):
        if self.census.ndim != 1 or self.arrivals.shape != (len(GROUP_ORDER), self.census.shape[0]):
            raise ValueError("census and arrivals must share one tick axis")
        if self.census.shape[0] == 0:
            raise ValueError("frame span is empty")
        if (self.census < 0).any() or (self.arrivals < 0).any():
            raise ValueError("series values must be non-negative")

    def __len__(self) -> int:
        return self.census.shape[0]

    @property
    def end(self) -> int:
        """One past the last tick ordinal."""
        return self.start + len(self)

    def tick(self, i: int) -> TickIndex:
        if not 0 <= i < len(self):
            raise IndexError(f"tick index {i} outside frame of {len(self)}")
        return self.grid.tick(self.start + i)

    def index_of(self, t: TickIndex | datetime) -> int:
        ordinal = t.ordinal if isinstance(t, TickIndex) else self.grid.at(t).ordinal
        i = ordinal - self.start
        if not 0 <= i < len(self):
            raise IndexError(f"{t} outside frame [{self.start}, {self.end})")
        return i

    def series(self, kind) -> np.ndarray:
        """The census series, or one group's arrival series ('census' | AcuityGroup)."""
        if kind == "census":
            return self.census
        return self.arrivals[GROUP_ORDER.index(AcuityGroup(kind))]

    def timestamps(self) -> np.ndarray:
        start64 = np.datetime64(self.grid.tick(self.start).timestamp, "m")
        return start64 + np.arange(len(self)) * np.timedelta64(TICK_MINUTES, "m")


def build_frame(snapshot, start: datetime, end: datetime,
                grid: TickGrid | None = None) -> SeriesFrame:
    """Reconstruct the frame for span [start, end); both boundaries on the grid.

    The arrival bucket at the first tick covers (start - 15min, start], so the
    frame's arrival mass equals the encounters with ESI arriving in
    (start - 15min, end - 15min].
    """
    if grid is None:
        epoch = snapshot.epoch
        if epoch is None:
            raise ValueError("cannot derive a grid from an empty snapshot")
        grid = TickGrid(epoch)
    t0 = grid.at(start)
    t1 = grid.at(end)
    n = t1.ordinal - t0.ordinal
    if n <= 0:
        raise ValueError("frame span is empty")

    arrays = snapshot.arrays()
    times = np.datetime64(start, "m") + np.arange(n) * np.timedelta64(TICK_MINUTES, "m")
    arrived = np.searchsorted(arrays["arrivals"], times, side="right")
    departed = np.searchsorted(arrays["departures"], times, side="right")
    census = (arrived - departed).astype(np.int64)

    arrivals = np.zeros((len(GROUP_ORDER), n), dtype=np.int64)
    prev_times = times - np.timedelta64(TICK_MINUTES, "m")
    for gi, g in enumerate(GROUP_ORDER):
        gt = arrays["group_arrivals"][g]
        hi = np.searchsorted(gt, times, side="right")
        lo = np.searchsorted(gt, prev_times, side="right")
        arrivals[gi] = hi - lo

    return SeriesFrame(grid, t0.ordinal, census, arrivals)


def concat_frames(a: SeriesFrame, b: SeriesFrame) -> SeriesFrame:
    if a.grid != b.grid or a.end != b.start:
        raise ValueError("frames must share a grid and be adjacent")
    return SeriesFrame(
        a.grid,
        a.start,
        np.concatenate([a.census, b.census]),
        np.concatenate([a.arrivals, b.arrivals], axis=1),
    )


def write_frame_csv(frame: SeriesFrame, target: str | Path | TextIO) -> int:
    """Export `timestamp,census,arrivals_emergent,arrivals_urgent,arrivals_nonurgent`."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            return write_frame_csv(frame, fh)
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(FRAME_CSV_HEADER)
    for i in range(len(frame)):
        writer.writerow(
            [
                format_timestamp(frame.tick(i).timestamp),
                int(frame.census[i]),
                int(frame.arrivals[0, i]),
                int(frame.arrivals[1, i]),
                int(frame.arrivals[2, i]),
            ]
        )
    return len(frame)
