"""Dataset assembly, the 12x6 model grid, scoring, metrics, and the baseline.

Targets: census plus per-acuity arrivals, each at 2/4/8-hour horizons
(12 combinations). Families: unpenalized Poisson GLM, its lasso/ridge/
elastic-net variants, the gradient-boosted trees, and the two-year
historical-average baseline.

Conventions fixed here:

* The y for an arrivals target is the cumulative count over (t, t+h],
  i.e. the sum of the next h/15 per-tick buckets.
* The baseline prediction at t is the mean of the target value at
  t - 52 weeks and t - 104 weeks (weekday-preserving offsets).
* The accuracy metric divides by max(actual, 1) so zero-actual windows
  are scored sanely, and both threshold comparisons are inclusive
  (|error| <= 4, relative accuracy >= 0.70).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from . import gbm, glm
from .records import AcuityGroup
from .timeseries import TICKS_PER_DAY, TICKS_PER_WEEK, SeriesFrame, TickIndex
from .features import WARMUP_TICKS, feature_matrix

HORIZON_HOURS = (2, 4, 8)
TICKS_PER_HOUR = 4

FAMILIES = ("glm", "glm-lasso", "glm-ridge", "glm-elasticnet", "gbm", "baseline")
GLM_FAMILIES = ("glm", "glm-lasso", "glm-ridge", "glm-elasticnet")

#: lam grid searched for the penalized GLM variants.
LAMBDA_GRID = (0.001, 0.01, 0.1, 1.0, 10.0)
#: holdout used to pick lam: the trailing slice of the training span.
VALIDATION_DAYS = 90

BASELINE_OFFSETS_WEEKS = (52, 104)


@dataclass(frozen=True)
class TargetSpec:
    kind: str  # "census" | "arrivals"
    group: AcuityGroup | None
    horizon_hours: int

    def __post_init__(self):
        if self.kind not in ("census", "arrivals"):
            raise ValueError(f"kind must be census or arrivals, got {self.kind!r}")
        if (self.group is None) != (self.kind == "census"):
            raise ValueError("census targets take no group; arrivals targets need one")
        if self.horizon_hours not in HORIZON_HOURS:
            raise ValueError(f"horizon must be one of {HORIZON_HOURS}")

    @property
    def horizon_ticks(self) -> int:
        return self.horizon_hours * TICKS_PER_HOUR

    @property
    def series_kind(self):
        """What the lag features read: 'census' or the acuity group."""
        return "census" if self.kind == "census" else self.group

    @property
    def key(self) -> str:
        head = "census" if self.kind == "census" else self.group.value
        return f"{head}-{self.horizon_hours}h"

    @classmethod
    def from_key(cls, key: str) -> "TargetSpec":
        head, _, tail = key.partition("-")
        horizon = int(tail.rstrip("h"))
        if head == "census":
            return cls("census", None, horizon)
        return cls("arrivals", AcuityGroup(head), horizon)


def all_targets() -> list[TargetSpec]:
    out = [TargetSpec("census", None, h) for h in HORIZON_HOURS]
    for g in AcuityGroup:
        out.extend(TargetSpec("arrivals", g, h) for h in HORIZON_HOURS)
    return out


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    mae: float
    pct_abs_err_le4: float
    pct_accuracy_ge70: float
    n: int

    def as_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "pct_abs_err_le4": self.pct_abs_err_le4,
            "pct_accuracy_ge70": self.pct_accuracy_ge70,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        return cls(**doc)


def metrics(preds, actuals) -> MetricsReport:
    """RMSE, MAE, share within +-4, and share with relative accuracy >= 70%."""
    preds = np.asarray(preds, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    if preds.shape != actuals.shape or preds.ndim != 1 or preds.size == 0:
        raise ValueError(f"need matching non-empty vectors, got {preds.shape} vs {actuals.shape}")
    err = np.abs(preds - actuals)
    accuracy = 1.0 - err / np.maximum(actuals, 1.0)
    return MetricsReport(
        rmse=float(np.sqrt(np.mean(err * err))),
        mae=float(np.mean(err)),
        pct_abs_err_le4=float(100.0 * np.mean(err <= 4.0)),
        pct_accuracy_ge70=float(100.0 * np.mean(accuracy >= 0.70)),
        n=int(preds.size),
    )


def target_values(frame: SeriesFrame, target: TargetSpec) -> np.ndarray:
    """y as a function of frame index i, defined for i in [0, len(frame) - h).

    Census: the census h ticks later. Arrivals: the group's count over the
    next h per-tick buckets, i.e. the window (t_i, t_i + h].
    """
    h = target.horizon_ticks
    n = len(frame)
    if n <= h:
        raise ValueError(f"frame of {n} ticks cannot support a {h}-tick horizon")
    series = frame.series(target.series_kind)
    if target.kind == "census":
        return series[h:].astype(float)
    cs = np.concatenate([[0], np.cumsum(series)])
    return (cs[h + 1 :] - cs[1 : n - h + 1]).astype(float)


@dataclass
class Dataset:
    target: TargetSpec
    X: np.ndarray  # (m, 54)
    y: np.ndarray  # (m,)
    ordinals: np.ndarray  # absolute tick ordinal of each row's prediction time


def build_dataset(frame: SeriesFrame, target: TargetSpec,
                  kind_cache: dict | None = None) -> Dataset:
    """Rows for every tick with both full lag history and a visible horizon.

    Eligible frame indices are [4, len(frame) - h), so the row count is
    len(frame) - warmup - horizon ticks.
    """
    h = target.horizon_ticks
    n = len(frame)
    if n <= WARMUP_TICKS + h:
        raise ValueError(
            f"frame of {n} ticks is too short for {WARMUP_TICKS} warm-up + {h} horizon ticks"
        )
    skind = target.series_kind
    if kind_cache is not None and skind in kind_cache:
        X_full, ordinals_full = kind_cache[skind]
    else:
        X_full, ordinals_full = feature_matrix(frame, skind)
        if kind_cache is not None:
            kind_cache[skind] = (X_full, ordinals_full)
    y_full = target_values(frame, target)  # indexed by frame index
    m = n - WARMUP_TICKS - h
    return Dataset(
        target=target,
        X=X_full[:m],
        y=y_full[WARMUP_TICKS:],
        ordinals=ordinals_full[:m],
    )


def baseline_predict(frame: SeriesFrame, t: TickIndex | datetime, target: TargetSpec) -> float:
    """Mean of the target value 52 and 104 weeks before t."""
    i = frame.index_of(t)
    y = target_values(frame, target)
    vals = []
    for weeks in BASELINE_OFFSETS_WEEKS:
        j = i - weeks * TICKS_PER_WEEK
        if j < 0:
            raise ValueError(f"baseline needs {weeks} weeks of history before {t}")
        vals.append(y[j])
    return float(np.mean(vals))


def baseline_predictions(frame: SeriesFrame, target: TargetSpec,
                         ordinals: np.ndarray) -> np.ndarray:
    y = target_values(frame, target)
    idx = np.asarray(ordinals) - frame.start
    out = np.zeros(idx.shape[0])
    for weeks in BASELINE_OFFSETS_WEEKS:
        j = idx - weeks * TICKS_PER_WEEK
        if (j < 0).any():
            raise ValueError(f"baseline needs {weeks} weeks of history for every row")
        out += y[j]
    return out / len(BASELINE_OFFSETS_WEEKS)


@dataclass
class TrainedModel:
    target: TargetSpec
    family: str
    parameters: object  # GlmModel | GbmModel | None (baseline)
    trained_span: tuple[datetime, datetime]
    metrics_on_test: MetricsReport | None = None

    def to_doc(self) -> dict:
        if self.family == "baseline":
            params = {}
        elif self.family == "gbm":
            params = json.loads(self.parameters.to_json())
        else:
            params = json.loads(self.parameters.to_json())
        return {
            "target": self.target.key,
            "family": self.family,
            "trained_span": [ts.isoformat(timespec="minutes") for ts in self.trained_span],
            "metrics_on_test": None if self.metrics_on_test is None else self.metrics_on_test.as_dict(),
            "parameters": params,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "TrainedModel":
        family = doc["family"]
        if family == "baseline":
            params = None
        elif family == "gbm":
            params = gbm.GbmModel.from_json(json.dumps(doc["parameters"]))
        else:
            params = glm.GlmModel.from_json(json.dumps(doc["parameters"]))
        mt = doc.get("metrics_on_test")
        return cls(
            target=TargetSpec.from_key(doc["target"]),
            family=family,
            parameters=params,
            trained_span=tuple(
                datetime.fromisoformat(ts) for ts in doc["trained_span"]
            ),
            metrics_on_test=None if mt is None else MetricsReport.from_dict(mt),
        )


def score(model: TrainedModel, x=None, *, frame: SeriesFrame | None = None,
          at: TickIndex | datetime | None = None) -> float:
    """Family dispatch for one forecast; the baseline needs frame/at instead of x.

    Census forecasts are displayed rounded to one decimal by the CLI and
    dashboard but this value (and everything persisted) keeps full precision.
    """
    if model.family == "baseline":
        if frame is None or at is None:
            raise ValueError("baseline scoring needs frame and at")
        return baseline_predict(frame, at, model.target)
    if model.family == "gbm":
        if not isinstance(model.parameters, gbm.GbmModel):
            raise TypeError(f"family gbm with payload {type(model.parameters).__name__}")
        return gbm.predict(model.parameters, x)
    if model.family in GLM_FAMILIES:
        if not isinstance(model.parameters, glm.GlmModel):
            raise TypeError(f"family {model.family} with payload {type(model.parameters).__name__}")
        return glm.predict(model.parameters, x)
    raise ValueError(f"unknown family {model.family!r}")


def family_predictions(model: TrainedModel, frame: SeriesFrame,
                       dataset: Dataset, rows: np.ndarray) -> np.ndarray:
    """Vectorised score over dataset rows (boolean mask or index array)."""
    if model.family == "baseline":
        return baseline_predictions(frame, dataset.target, dataset.ordinals[rows])
    if model.family == "gbm":
        return gbm.predict_matrix(model.parameters, dataset.X[rows])
    return glm.predict_matrix(model.parameters, dataset.X[rows])


_GLM_SPEC_DEFAULTS = {
    "glm": glm.GlmSpec(penalty="none"),
    "glm-lasso": glm.GlmSpec(penalty="lasso", lam=0.01),
    "glm-ridge": glm.GlmSpec(penalty="ridge", lam=0.01),
    "glm-elasticnet": glm.GlmSpec(penalty="elasticnet", lam=0.01, l1_ratio=0.5),
}


def _select_lambda(family: str, ds: Dataset, train_mask: np.ndarray,
                   split_ordinal: int, lambda_grid) -> float:
    """Grid-search lam by MAE on the trailing validation slice of the train span."""
    if len(lambda_grid) == 1:
        return lambda_grid[0]
    train_ordinals = ds.ordinals[train_mask]
    span_ticks = int(train_ordinals[-1] - train_ordinals[0]) + 1
    val_ticks = min(VALIDATION_DAYS * TICKS_PER_DAY, span_ticks // 2)
    val_start = split_ordinal - val_ticks
    head = train_mask & (ds.ordinals < val_start)
    val = train_mask & (ds.ordinals >= val_start)
    if head.sum() < ds.X.shape[1] + 2 or val.sum() == 0:
        return lambda_grid[len(lambda_grid) // 2]
    spec = _GLM_SPEC_DEFAULTS[family]
    models = glm.fit_path(ds.X[head], ds.y[head], spec, lambda_grid)
    maes = [
        float(np.mean(np.abs(glm.predict_matrix(m, ds.X[val]) - ds.y[val])))
        for m in models
    ]
    return lambda_grid[int(np.argmin(maes))]


@dataclass
class ModelGrid:
    split_date: datetime
    entries: dict  # (target_key, family) -> TrainedModel
    psi_reference: dict  # series-kind name -> reference doc (see monitor)

    def targets(self) -> list[str]:
        return sorted({key for key, _ in self.entries})

    def families_for(self, target_key: str) -> list[str]:
        return [fam for key, fam in self.entries if key == target_key]

    def entry(self, target_key: str, family: str) -> TrainedModel:
        return self.entries[(target_key, family)]

    def best_family(self, target_key: str) -> str:
        """Deployment default: lowest test MAE among evaluated families."""
        candidates = [
            (tm.metrics_on_test.mae, fam)
            for (key, fam), tm in self.entries.items()
            if key == target_key and tm.metrics_on_test is not None
        ]
        if not candidates:
            raise ValueError(f"no evaluated entries for target {target_key}")
        return min(candidates)[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "split_date": self.split_date.isoformat(timespec="minutes"),
                "entries": [tm.to_doc() for tm in self.entries.values()],
                "psi_reference": self.psi_reference,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelGrid":
        doc = json.loads(text)
        entries = {}
        for entry_doc in doc["entries"]:
            tm = TrainedModel.from_doc(entry_doc)
            entries[(tm.target.key, tm.family)] = tm
        return cls(
            split_date=datetime.fromisoformat(doc["split_date"]),
            entries=entries,
            psi_reference=doc.get("psi_reference", {}),
        )


def train_all(frame: SeriesFrame, split_date: datetime,
              targets: list[TargetSpec] | None = None,
              families: tuple[str, ...] = FAMILIES,
              gbm_spec: gbm.GbmSpec = gbm.GbmSpec(),
              lambda_grid: tuple[float, ...] = LAMBDA_GRID,
              seed: int = 0) -> ModelGrid:
    """Fit every (target, family) pair on t < split_date and evaluate on t >= split_date.

    All families of one target are evaluated on identical test rows; when
    the baseline participates, test rows are additionally restricted to
    ticks with two full years of history, and at least two pre-split years
    are required.
    """
    from .monitor import psi_reference_doc

    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise ValueError(f"unknown families: {sorted(unknown)}")
    if targets is None:
        targets = all_targets()
    split_ordinal = frame.grid.at(split_date).ordinal
    if not frame.start < split_ordinal < frame.end:
        raise ValueError(f"split {split_date} outside the frame span")
    if "baseline" in families:
        needed = BASELINE_OFFSETS_WEEKS[-1] * TICKS_PER_WEEK
        if split_ordinal - frame.start < needed:
            raise ValueError(
                "family baseline requires 104 weeks of pre-split history "
                f"({split_ordinal - frame.start} ticks available, {needed} needed)"
            )

    span = (frame.tick(0).timestamp, split_date)
    kind_cache: dict = {}
    entries = {}
    psi_ref = {}
    for target in targets:
        ds = build_dataset(frame, target, kind_cache)
        train_mask = ds.ordinals < split_ordinal
        test_mask = ds.ordinals >= split_ordinal
        if "baseline" in families:
            horizon_ok = (ds.ordinals - frame.start) >= BASELINE_OFFSETS_WEEKS[-1] * TICKS_PER_WEEK
            test_mask = test_mask & horizon_ok
        if train_mask.sum() < ds.X.shape[1] + 2:
            raise ValueError(f"family glm: only {int(train_mask.sum())} pre-split rows for {target.key}")
        if test_mask.sum() == 0:
            raise ValueError(f"no test rows after {split_date} for {target.key}")

        skind_name = target.series_kind if isinstance(target.series_kind, str) else target.series_kind.value
        if skind_name not in psi_ref:
            psi_ref[skind_name] = psi_reference_doc(ds.X[train_mask])

        for family in families:
            if family == "baseline":
                tm = TrainedModel(target, family, None, span)
            elif family == "gbm":
                model = gbm.fit(ds.X[train_mask], ds.y[train_mask], gbm_spec, seed)
                tm = TrainedModel(target, family, model, span)
            else:
                spec = _GLM_SPEC_DEFAULTS[family]
                if family != "glm":
                    lam = _select_lambda(family, ds, train_mask, split_ordinal, lambda_grid)
                    spec = glm.GlmSpec(
                        penalty=spec.penalty, lam=lam, l1_ratio=spec.l1_ratio,
                        max_iter=spec.max_iter, tol=spec.tol,
                    )
                model = glm.fit(ds.X[train_mask], ds.y[train_mask], spec)
                tm = TrainedModel(target, family, model, span)
            preds = family_predictions(tm, frame, ds, test_mask)
            tm.metrics_on_test = metrics(preds, ds.y[test_mask])
            entries[(target.key, family)] = tm

    return ModelGrid(split_date=split_date, entries=entries, psi_reference=psi_ref)


def evaluation_report(grid: ModelGrid) -> list[dict]:
    """Flat JSON-ready rows mirroring the per-target, per-family results tables."""
    rows = []
    for (target_key, family), tm in sorted(grid.entries.items()):
        row = {"target": target_key, "family": family}
        row.update(tm.metrics_on_test.as_dict() if tm.metrics_on_test else {})
        rows.append(row)
    return rows


def render_report(rows: list[dict]) -> str:
    header = ["target", "family", "rmse", "mae", "abs_err<=4 %", "accuracy>=70% %", "n"]
    table = [header]
    for row in rows:
        table.append(
            [
                row["target"],
                row["family"],
                f"{row['rmse']:.4f}",
                f"{row['mae']:.4f}",
                f"{row['pct_abs_err_le4']:.2f}",
                f"{row['pct_accuracy_ge70']:.2f}",
                str(row["n"]),
            ]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def staffing_recommendation(census_forecast: float) -> int:
    """Nurses to cover a census forecast at the 4:1 patient-to-nurse ratio."""
    if census_forecast < 0:
        raise ValueError("census forecast must be non-negative")
    return math.ceil(census_forecast / 4.0)


def display_forecast(target_key: str, value: float) -> float:
    """Display rule: census forecasts round to one decimal; counts stay raw."""
    return round(value, 1) if target_key.startswith("census") else value
