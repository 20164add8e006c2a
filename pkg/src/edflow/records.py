"""Encounter ingest, validation, persistence, and time-range queries.

Records carry only what the downstream models consume: an identifier,
arrival and (optional) departure timestamps at minute precision in the
facility's local clock, and an optional ESI acuity level 1..5.

Storage is an append log (JSONL) plus an in-memory index; on reload the
latest line per encounter_id wins, mirroring ingest's replace-on-duplicate
behaviour.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

TIMESTAMP_FMT = "%Y-%m-%dT%H:%M"
CSV_HEADER = ["encounter_id", "arrival_time", "departure_time", "esi"]

DEFAULT_OPEN_STAY_CAP_HOURS = 24.0


class AcuityGroup(str, Enum):
    EMERGENT = "emergent"
    URGENT = "urgent"
    NONURGENT = "nonurgent"


#: ESI levels covered by each group; the mapping is total over 1..5.
GROUP_ESI = {
    AcuityGroup.EMERGENT: (1, 2),
    AcuityGroup.URGENT: (3,),
    AcuityGroup.NONURGENT: (4, 5),
}

_ESI_TO_GROUP = {esi: g for g, levels in GROUP_ESI.items() for esi in levels}


def acuity_group(esi: int) -> AcuityGroup:
    """Map an ESI level to its acuity group: {1,2} emergent, {3} urgent, {4,5} non-urgent."""
    try:
        return _ESI_TO_GROUP[esi]
    except KeyError:
        raise ValueError(f"esi must be in 1..5, got {esi!r}") from None


def parse_timestamp(text: str) -> datetime:
    """Parse the external 'YYYY-MM-DDTHH:MM' local-clock format."""
    return datetime.strptime(text, TIMESTAMP_FMT)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FMT)


@dataclass(frozen=True)
class EncounterRecord:
    encounter_id: str
    arrival_time: datetime
    departure_time: datetime | None = None
    esi: int | None = None

    def __post_init__(self):
        if self.departure_time is not None and self.departure_time <= self.arrival_time:
            raise ValueError(
                f"{self.encounter_id}: departure_time must be strictly after arrival_time"
            )
        if self.esi is not None and self.esi not in _ESI_TO_GROUP:
            raise ValueError(f"{self.encounter_id}: esi must be in 1..5, got {self.esi!r}")

    @property
    def group(self) -> AcuityGroup | None:
        return None if self.esi is None else _ESI_TO_GROUP[self.esi]

    def effective_departure(self, cap_hours: float = DEFAULT_OPEN_STAY_CAP_HOURS) -> datetime:
        """Departure used for census: the recorded one, or arrival + cap for open stays."""
        if self.departure_time is not None:
            return self.departure_time
        return self.arrival_time + timedelta(hours=cap_hours)


@dataclass
class IngestReport:
    total: int = 0
    accepted: int = 0
    rejected: int = 0
    replaced: int = 0
    with_esi: int = 0
    reject_reasons: Counter = None

    def __post_init__(self):
        if self.reject_reasons is None:
            self.reject_reasons = Counter()

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "replaced": self.replaced,
            "with_esi": self.with_esi,
            "reject_reasons": dict(self.reject_reasons),
        }


class IngestError(Exception):
    """Fatal ingest failure: the source itself is unreadable."""


def _parse_row(row: dict, line_no: int) -> EncounterRecord:
    encounter_id = (row.get("encounter_id") or "").strip()
    if not encounter_id:
        raise ValueError("missing encounter_id")
    raw_arrival = row.get("arrival_time")
    if raw_arrival in (None, ""):
        raise ValueError("missing arrival_time")
    try:
        arrival = parse_timestamp(str(raw_arrival))
    except ValueError:
        raise ValueError("malformed arrival_time") from None

    departure = None
    raw_departure = row.get("departure_time")
    if raw_departure not in (None, ""):
        try:
            departure = parse_timestamp(str(raw_departure))
        except ValueError:
            raise ValueError("malformed departure_time") from None
        if departure <= arrival:
            raise ValueError("non-positive stay")

    esi = None
    raw_esi = row.get("esi")
    if raw_esi not in (None, ""):
        try:
            esi = int(raw_esi)
        except (TypeError, ValueError):
            raise ValueError("malformed esi") from None
        if esi not in _ESI_TO_GROUP:
            raise ValueError("esi outside 1..5")

    return EncounterRecord(encounter_id, arrival, departure, esi)


def iter_source_rows(source: TextIO, fmt: str) -> Iterator[dict]:
    if fmt == "csv":
        reader = csv.DictReader(source)
        if reader.fieldnames is None or "encounter_id" not in reader.fieldnames:
            raise IngestError("csv source missing the encounter header row")
        yield from reader
    elif fmt == "jsonl":
        for line in source:
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                yield {"__malformed__": line}
                continue
            yield row
    else:
        raise IngestError(f"unknown source format {fmt!r}")


def detect_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    raise IngestError(f"cannot infer format from {path}; expected .csv or .jsonl")


class _Snapshot:
    """Immutable view of the store used by readers and the timeseries layer."""

    def __init__(self, records: list[EncounterRecord], cap_hours: float):
        self.records = records  # sorted by (arrival_time, encounter_id)
        self.cap_hours = cap_hours
        self._arrays = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def epoch(self) -> datetime | None:
        """Midnight of the earliest arrival; the 15-minute grid anchor."""
        if not self.records:
            return None
        first = self.records[0].arrival_time
        return first.replace(hour=0, minute=0)

    def arrays(self) -> dict:
        """Sorted numpy arrays backing the vectorised census/arrival math."""
        if self._arrays is None:
            arr = np.array(
                [r.arrival_time for r in self.records], dtype="datetime64[m]"
            )
            dep = np.sort(
                np.array(
                    [r.effective_departure(self.cap_hours) for r in self.records],
                    dtype="datetime64[m]",
                )
            )
            by_group = {}
            for g in AcuityGroup:
                by_group[g] = np.array(
                    [r.arrival_time for r in self.records if r.group is g],
                    dtype="datetime64[m]",
                )
            self._arrays = {"arrivals": arr, "departures": dep, "group_arrivals": by_group}
        return self._arrays


class EventStore:
    """Single-writer, many-reader encounter store.

    Writers mutate under a lock and publish a fresh immutable snapshot;
    readers grab whichever snapshot is current and never block.
    """

    def __init__(self, log_path: str | Path | None = None,
                 cap_hours: float = DEFAULT_OPEN_STAY_CAP_HOURS):
        self._records: dict[str, EncounterRecord] = {}
        self._cap_hours = cap_hours
        self._lock = threading.Lock()
        self._snapshot = _Snapshot([], cap_hours)
        self._log_path = Path(log_path) if log_path is not None else None
        if self._log_path is not None and self._log_path.exists():
            self._load_log()

    @property
    def cap_hours(self) -> float:
        return self._cap_hours

    def _load_log(self):
        with self._log_path.open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                self._records[row["encounter_id"]] = _parse_row(row, 0)
        self._publish()

    def _publish(self):
        ordered = sorted(
            self._records.values(), key=lambda r: (r.arrival_time, r.encounter_id)
        )
        self._snapshot = _Snapshot(ordered, self._cap_hours)

    def snapshot(self) -> _Snapshot:
        return self._snapshot

    def __len__(self) -> int:
        return len(self._snapshot)

    def ingest(self, source: str | Path | TextIO | Iterable[EncounterRecord],
               fmt: str | None = None) -> IngestReport:
        """Ingest a CSV/JSONL stream or an iterable of already-built records.

        Per-row violations reject the row and continue; an unreadable source
        raises IngestError. A duplicate encounter_id replaces the stored
        record and counts as a replacement.
        """
        close_after = False
        if isinstance(source, (str, Path)):
            fmt = fmt or detect_format(source)
            try:
                source_io = open(source, "r", newline="")
            except OSError as exc:
                raise IngestError(f"cannot read {source}: {exc}") from exc
            close_after = True
        elif isinstance(source, io.TextIOBase):
            if fmt is None:
                raise IngestError("fmt required when ingesting from a stream")
            source_io = source
        else:
            source_io = None  # iterable of records

        report = IngestReport()
        log_lines: list[str] = []
        try:
            with self._lock:
                if source_io is not None:
                    rows = iter_source_rows(source_io, fmt)
                    for line_no, row in enumerate(rows, start=1):
                        report.total += 1
                        if "__malformed__" in row:
                            report.rejected += 1
                            report.reject_reasons["malformed row"] += 1
                            continue
                        try:
                            record = _parse_row(row, line_no)
                        except ValueError as exc:
                            report.rejected += 1
                            report.reject_reasons[str(exc)] += 1
                            continue
                        self._accept(record, report, log_lines)
                else:
                    for record in source:
                        report.total += 1
                        self._accept(record, report, log_lines)
                if log_lines and self._log_path is not None:
                    self._log_path.parent.mkdir(parents=True, exist_ok=True)
                    with self._log_path.open("a") as fh:
                        fh.writelines(log_lines)
                self._publish()
        finally:
            if close_after:
                source_io.close()
        return report

    def _accept(self, record: EncounterRecord, report: IngestReport, log_lines: list):
        if record.encounter_id in self._records:
            report.replaced += 1
        self._records[record.encounter_id] = record
        report.accepted += 1
        if record.esi is not None:
            report.with_esi += 1
        log_lines.append(json.dumps(record_to_row(record)) + "\n")

    def query(self, start: datetime, end: datetime) -> list[EncounterRecord]:
        """Records overlapping [start, end): arrival < end and not departed by start.

        Open-ended stays (no departure recorded) overlap every range after
        their arrival; the census cap applies only to census math, not here.
        """
        if start >= end:
            raise ValueError("query range requires start < end")
        snap = self._snapshot
        out = []
        for r in snap.records:
            if r.arrival_time >= end:
                break
            if r.departure_time is None or r.departure_time > start:
                out.append(r)
        return out

    def export(self, target: str | Path | TextIO, fmt: str | None = None) -> int:
        """Write all stored records, ordered by arrival; returns the row count."""
        snap = self._snapshot
        if isinstance(target, (str, Path)):
            fmt = fmt or detect_format(target)
            with open(target, "w", newline="") as fh:
                return self._write(fh, fmt, snap)
        if fmt is None:
            raise IngestError("fmt required when exporting to a stream")
        return self._write(target, fmt, snap)

    @staticmethod
    def _write(fh: TextIO, fmt: str, snap: _Snapshot) -> int:
        if fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in snap.records:
                writer.writerow(
                    [
                        r.encounter_id,
                        format_timestamp(r.arrival_time),
                        "" if r.departure_time is None else format_timestamp(r.departure_time),
                        "" if r.esi is None else r.esi,
                    ]
                )
        elif fmt == "jsonl":
            for r in snap.records:
                fh.write(json.dumps(record_to_row(r)) + "\n")
        else:
            raise IngestError(f"unknown export format {fmt!r}")
        return len(snap.records)


def record_to_row(r: EncounterRecord) -> dict:
    return {
        "encounter_id": r.encounter_id,
        "arrival_time": format_timestamp(r.arrival_time),
        "departure_time": None if r.departure_time is None else format_timestamp(r.departure_time),
        "esi": r.esi,
    }


def write_records_csv(records: Iterable[EncounterRecord], path: str | Path) -> int:
    """Write records in the external CSV format without going through a store."""
    n = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.encounter_id,
                    format_timestamp(r.arrival_time),
                    "" if r.departure_time is None else format_timestamp(r.departure_time),
                    "" if r.esi is None else r.esi,
                ]
            )
            n += 1
    return n
