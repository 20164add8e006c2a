"""Live scoring loop: tick, reconcile, model health, and the action log.

One scheduler owns the tick/reconcile sequence (reconcile runs right
after tick each interval); API readers work off snapshots. Every tick
emits exactly one record per target - twelve in all - and a single model
failure degrades only its own record. The prediction log is append-only:
reconciliation fills in actual/abs_err and nothing else ever mutates.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from . import forecaster
from .config import ServiceConfig
from .features import WarmupError, feature_matrix, feature_row
from .forecaster import ModelGrid, TargetSpec, all_targets, metrics, staffing_recommendation
from .monitor import ALARMED_FEATURES, psi_values
from .records import EventStore, format_timestamp
from .timeseries import TICK, SeriesFrame, TickGrid, build_frame

STATUS_OK = "ok"
STATUS_WARMUP = "skipped-warmup"
STATUS_ERROR = "error"

ACTION_TYPES = ("called-in-staff", "sent-staff-home", "no-action")

MAX_RECONCILE_ATTEMPTS = 3


@dataclass
class PredictionRecord:
    made_at: datetime
    target: str
    family: str
    horizon_hours: int
    status: str
    predicted: float | None
    actual: float | None = None
    abs_err: float | None = None
    attempts: int = 0
    unreconcilable: bool = False

    @property
    def due_at(self) -> datetime:
        return self.made_at + timedelta(hours=self.horizon_hours)

    @property
    def pending(self) -> bool:
        return (
            self.status == STATUS_OK
            and self.actual is None
            and not self.unreconcilable
        )

    def to_doc(self) -> dict:
        return {
            "made_at": format_timestamp(self.made_at),
            "target": self.target,
            "family": self.family,
            "horizon_hours": self.horizon_hours,
            "status": self.status,
            "predicted": self.predicted,
            "actual": self.actual,
            "abs_err": self.abs_err,
            "unreconcilable": self.unreconcilable,
        }


class PredictionLog:
    """Append-only prediction store: a JSONL op log plus an in-memory index."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._records: list[PredictionRecord] = []
        self._index: dict[tuple[str, str], PredictionRecord] = {}
        if self._path is not None and self._path.exists():
            self._load()

    def _key(self, made_at: datetime, target: str) -> tuple[str, str]:
        return (format_timestamp(made_at), target)

    def _load(self):
        with self._path.open() as fh:
            for line in fh:
                if not line.strip():
                    continue
                doc = json.loads(line)
                op = doc.pop("op")
                if op == "predict":
                    rec = PredictionRecord(
                        made_at=datetime.fromisoformat(doc["made_at"]),
                        target=doc["target"],
                        family=doc["family"],
                        horizon_hours=doc["horizon_hours"],
                        status=doc["status"],
                        predicted=doc["predicted"],
                    )
                    self._append_mem(rec)
                elif op == "reconcile":
                    rec = self._index[(doc["made_at"], doc["target"])]
                    rec.actual = doc["actual"]
                    rec.abs_err = doc["abs_err"]
                elif op == "unreconcilable":
                    rec = self._index[(doc["made_at"], doc["target"])]
                    rec.unreconcilable = True

    def _append_mem(self, rec: PredictionRecord):
        self._records.append(rec)
        self._index[self._key(rec.made_at, rec.target)] = rec

    def _write(self, doc: dict):
        if self._path is None:
            return
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("a") as fh:
            fh.write(json.dumps(doc) + "\n")

    def append(self, rec: PredictionRecord):
        self._append_mem(rec)
        self._write(
            {
                "op": "predict",
                "made_at": format_timestamp(rec.made_at),
                "target": rec.target,
                "family": rec.family,
                "horizon_hours": rec.horizon_hours,
                "status": rec.status,
                "predicted": rec.predicted,
            }
        )

    def mark_reconciled(self, rec: PredictionRecord, actual: float):
        rec.actual = actual
        rec.abs_err = abs(rec.predicted - actual)
        self._write(
            {
                "op": "reconcile",
                "made_at": format_timestamp(rec.made_at),
                "target": rec.target,
                "actual": rec.actual,
                "abs_err": rec.abs_err,
            }
        )

    def mark_unreconcilable(self, rec: PredictionRecord):
        rec.unreconcilable = True
        self._write(
            {
                "op": "unreconcilable",
                "made_at": format_timestamp(rec.made_at),
                "target": rec.target,
            }
        )

    def get(self, made_at: datetime, target: str) -> PredictionRecord | None:
        return self._index.get(self._key(made_at, target))

    def has_tick(self, made_at: datetime) -> bool:
        return any(self.get(made_at, t.key) is not None for t in all_targets())

    def records(self, start: datetime | None = None, end: datetime | None = None,
                target: str | None = None) -> list[PredictionRecord]:
        out = []
        for rec in self._records:
            if start is not None and rec.made_at < start:
                continue
            if end is not None and rec.made_at >= end:
                continue
            if target is not None and rec.target != target:
                continue
            out.append(rec)
        return out

    def pending_due(self, now: datetime) -> list[PredictionRecord]:
        return [r for r in self._records if r.pending and r.due_at <= now]

    def __len__(self) -> int:
        return len(self._records)


class ActionLog:
    """End-of-shift action forms, deduplicated by client request id."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._actions: list[dict] = []
        self._by_request: dict[str, dict] = {}
        if self._path is not None and self._path.exists():
            with self._path.open() as fh:
                for line in fh:
                    if line.strip():
                        self._remember(json.loads(line))

    def _remember(self, doc: dict):
        self._actions.append(doc)
        rid = doc.get("request_id")
        if rid:
            self._by_request[rid] = doc

    def record(self, shift_id: str, timestamp: datetime, action_type: str,
               free_text: str = "", request_id: str | None = None) -> dict:
        if action_type not in ACTION_TYPES:
            raise ValueError(f"action_type must be one of {ACTION_TYPES}, got {action_type!r}")
        if request_id and request_id in self._by_request:
            stored = dict(self._by_request[request_id])
            stored["duplicate"] = True
            return stored
        doc = {
            "shift_id": shift_id,
            "timestamp": format_timestamp(timestamp),
            "action_type": action_type,
            "free_text": free_text or "",
            "request_id": request_id,
        }
        self._remember(doc)
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a") as fh:
                fh.write(json.dumps(doc) + "\n")
        return dict(doc, duplicate=False)

    def query(self, start: datetime, end: datetime) -> list[dict]:
        out = []
        for doc in self._actions:
            ts = datetime.fromisoformat(doc["timestamp"])
            if start <= ts < end:
                out.append(doc)
        return out


class ForecastService:
    """Scores the deployed model per target every tick and reconciles outcomes."""

    def __init__(self, store: EventStore, grid: ModelGrid, config: ServiceConfig,
                 log: PredictionLog | None = None, actions: ActionLog | None = None):
        self.store = store
        self.grid = grid
        self.config = config
        self.log = log if log is not None else PredictionLog()
        self.actions = actions if actions is not None else ActionLog()
        self.targets = all_targets()
        self.deployed: dict[str, forecaster.TrainedModel] = {}
        for target in self.targets:
            family = config.deployed.get(target.key) or grid.best_family(target.key)
            self.deployed[target.key] = grid.entry(target.key, family)
        self.now: datetime | None = None
        self._lock = threading.RLock()
        self._frame: SeriesFrame | None = None
        self._frame_len = 0

    @property
    def tick_grid(self) -> TickGrid:
        epoch = self.store.snapshot().epoch
        if epoch is None:
            raise ValueError("event store is empty; no tick grid")
        return TickGrid(epoch)

    def frame_through(self, ts: datetime) -> SeriesFrame:
        """Frame [epoch, ts + 15min), cached and extended as the clock advances."""
        grid = self.tick_grid
        end = ts + TICK
        if (
            self._frame is None
            or self._frame.grid != grid
            or self._frame.end < grid.at(end).ordinal
            or len(self.store.snapshot()) != self._frame_len
        ):
            self._frame = build_frame(self.store.snapshot(), grid.epoch, end, grid)
            self._frame_len = len(self.store.snapshot())
        return self._frame

    def tick(self, now: datetime) -> list[PredictionRecord]:
        """Score all 12 targets as of `now`; idempotent per tick timestamp."""
        with self._lock:
            if self.log.has_tick(now):
                return [self.log.get(now, t.key) for t in self.targets]
            frame = self.frame_through(now)
            out = []
            for target in self.targets:
                model = self.deployed[target.key]
                rec = PredictionRecord(
                    made_at=now,
                    target=target.key,
                    family=model.family,
                    horizon_hours=target.horizon_hours,
                    status=STATUS_OK,
                    predicted=None,
                )
                try:
                    x = feature_row(frame, now, target.series_kind)
                    rec.predicted = float(
                        forecaster.score(model, x, frame=frame, at=now)
                    )
                except WarmupError:
                    rec.status = STATUS_WARMUP
                except Exception:
                    rec.status = STATUS_ERROR
                self.log.append(rec)
                out.append(rec)
            self.now = now
            return out

    def reconcile(self, now: datetime) -> int:
        """Fill actuals for every due record; gap-hit records give up after 3 tries."""
        with self._lock:
            due = self.log.pending_due(now)
            if not due:
                return 0
            frame = self.frame_through(now)
            filled = 0
            for rec in due:
                target = TargetSpec.from_key(rec.target)
                target_time = rec.due_at
                if self.config.in_gap(target_time):
                    rec.attempts += 1
                    if rec.attempts >= MAX_RECONCILE_ATTEMPTS:
                        self.log.mark_unreconcilable(rec)
                    continue
                try:
                    i = frame.index_of(target_time)
                except IndexError:
                    rec.attempts += 1
                    if rec.attempts >= MAX_RECONCILE_ATTEMPTS:
                        self.log.mark_unreconcilable(rec)
                    continue
                if target.kind == "census":
                    actual = float(frame.census[i])
                else:
                    i0 = frame.index_of(rec.made_at)
                    actual = float(frame.series(target.group)[i0 + 1 : i + 1].sum())
                self.log.mark_reconciled(rec, actual)
                filled += 1
            return filled

    def replay(self, start: datetime, end: datetime) -> int:
        """Run tick+reconcile over [start, end); returns the tick count."""
        grid = self.tick_grid
        t = grid.at(start)
        end_ordinal = grid.at(end).ordinal
        count = 0
        while t.ordinal < end_ordinal:
            self.tick(t.timestamp)
            self.reconcile(t.timestamp)
            t = grid.tick(t.ordinal + 1)
            count += 1
        return count

    def health(self, window_days: int) -> dict:
        """Rolling per-model metrics, per-feature PSI, and threshold alarms.

        PSI is reported for all 54 features but alarms only on the
        data-driven ones (lags and slope); see monitor.ALARMED_FEATURES.
        """
        with self._lock:
            if self.now is None:
                raise ValueError("no ticks processed yet")
            end = self.now + TICK
            start = end - timedelta(days=window_days)
            window = self.log.records(start, end)
            reconciled = [r for r in window if r.actual is not None]
            if not reconciled:
                raise ValueError(f"no reconciled records in the last {window_days} days")

            alarms = []
            models = {}
            for target in self.targets:
                recs = [r for r in reconciled if r.target == target.key]
                if not recs:
                    continue
                report = metrics(
                    [r.predicted for r in recs], [r.actual for r in recs]
                )
                models[target.key] = report.as_dict()
                frozen = self.deployed[target.key].metrics_on_test
                if frozen is not None:
                    threshold = self.config.mae_alarm_ratio * frozen.mae
                    if report.mae > threshold:
                        alarms.append(
                            {
                                "name": target.key,
                                "reason": "rolling-mae",
                                "value": report.mae,
                                "threshold": threshold,
                            }
                        )

            feature_psi = self._feature_psi(start, end)
            for kind, per_feature in feature_psi.items():
                for fname, value in per_feature.items():
                    if fname in ALARMED_FEATURES and value > self.config.psi_alarm_threshold:
                        alarms.append(
                            {
                                "name": f"{kind}/{fname}",
                                "reason": "psi",
                                "value": value,
                                "threshold": self.config.psi_alarm_threshold,
                            }
                        )

            return {
                "window": [format_timestamp(start), format_timestamp(end)],
                "models": models,
                "feature_psi": feature_psi,
                "alarms": alarms,
            }

    def _feature_psi(self, start: datetime, end: datetime) -> dict:
        from .features import FEATURE_NAMES

        frame = self.frame_through(self.now)
        scored = {
            r.made_at
            for r in self.log.records(start, end)
            if r.status == STATUS_OK
        }
        if not scored:
            return {}
        out = {}
        for kind_name, reference in self.grid.psi_reference.items():
            X_full, ordinals = feature_matrix(frame, self._series_kind(kind_name))
            wanted = np.array(
                [frame.grid.at(ts).ordinal for ts in sorted(scored)], dtype=ordinals.dtype
            )
            rows = np.isin(ordinals, wanted)
            if not rows.any():
                continue
            values = psi_values(reference, X_full[rows])
            out[kind_name] = {
                FEATURE_NAMES[j]: float(values[j]) for j in range(len(FEATURE_NAMES))
            }
        return out

    @staticmethod
    def _series_kind(kind_name: str):
        from .records import AcuityGroup

        return "census" if kind_name == "census" else AcuityGroup(kind_name)

    def staffing(self, at: datetime) -> dict:
        """Nurse recommendation per horizon from the census forecasts made at `at`.

        Off-grid timestamps floor to the tick containing them.
        """
        at = self.tick_grid.floor(at).timestamp
        out = {}
        for h in (2, 4, 8):
            rec = self.log.get(at, f"census-{h}h")
            if rec is None or rec.status != STATUS_OK:
                out[f"{h}h"] = None
            else:
                out[f"{h}h"] = {
                    "census_forecast": rec.predicted,
                    "nurses": staffing_recommendation(rec.predicted),
                    "for_time": format_timestamp(rec.due_at),
                }
        return out

    def record_shift_action(self, shift_id: str, timestamp: datetime, action_type: str,
                            free_text: str = "", request_id: str | None = None) -> dict:
        with self._lock:
            return self.actions.record(shift_id, timestamp, action_type, free_text, request_id)


def load_service(config: ServiceConfig) -> ForecastService:
    """Wire a service from the on-disk layout under config.data_dir."""
    store = EventStore(config.events_path)
    grid = ModelGrid.from_json(config.bundle_path.read_text())
    log = PredictionLog(config.predictions_path)
    actions = ActionLog(config.actions_path)
    return ForecastService(store, grid, config, log, actions)
