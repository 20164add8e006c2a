"""The 54-dimensional regressor row for one (tick, target-kind) pair.

Block layout, in serialization order:

    0..3    lag values: series value at t-15m, t-30m, t-45m, t-60m
    4..15   month one-hot (January..December)
    16..39  hour-of-day one-hot (00..23)
    40..46  day-of-week one-hot (Monday..Sunday)
    47..50  quarter one-hot (Q1=Jan-Mar .. Q4=Oct-Dec)
    51      weekend flag (Saturday/Sunday)
    52      evening flag (hour >= 20 or < 8)
    53      trend slope over the four lags, in value per 15-minute step

The lags enter raw; the lag weights apply inside the slope, a weighted
least-squares line through the previous hour with recent points weighted
hardest. The lag series is the census series for census targets and the
matching group's arrival series for arrival targets.
"""

from __future__ import annotations

from datetime import datetime

import numpy as np

from .records import AcuityGroup
from .timeseries import SeriesFrame, TickIndex

#: Weights on the t-15m, t-30m, t-45m, t-60m values inside the slope fit.
LAG_WEIGHTS = np.array([2.0, 0.5, 0.25, 0.05])

#: Lag positions in 15-minute steps relative to prediction time.
_LAG_X = np.array([-1.0, -2.0, -3.0, -4.0])

N_LAGS = 4
WARMUP_TICKS = N_LAGS

FEATURE_NAMES: tuple[str, ...] = (
    ("lag_15m", "lag_30m", "lag_45m", "lag_60m")
    + tuple(f"month_{m:02d}" for m in range(1, 13))
    + tuple(f"hour_{h:02d}" for h in range(24))
    + ("dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat", "dow_sun")
    + ("quarter_q1", "quarter_q2", "quarter_q3", "quarter_q4")
    + ("is_weekend", "is_evening", "trend_slope")
)

N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 54

#: Bump when FEATURE_NAMES or block semantics change; serialized with models.
FEATURE_ORDER_VERSION = "54.1"


class WarmupError(ValueError):
    """Raised when a tick lacks the 60 minutes of history the lags need."""


def slope_coefficients(weights: np.ndarray = LAG_WEIGHTS) -> np.ndarray:
    """Coefficients c with slope = c . lags, from the weighted LS closed form.

    The weighted line fit through (x_i, y_i) has slope
    sum w (x - xbar_w)(y - ybar_w) / sum w (x - xbar_w)^2, which is linear in
    y with these coefficients.
    """
    w = np.asarray(weights, dtype=float)
    xc = _LAG_X - (w @ _LAG_X) / w.sum()
    return w * xc / (w * xc * xc).sum()


_SLOPE_C = slope_coefficients()


def weighted_slope(lags, weights: np.ndarray = LAG_WEIGHTS) -> float:
    """Slope of the weighted LS line through the four lags; positive = rising toward t."""
    y = np.asarray(lags, dtype=float)
    if y.shape != (N_LAGS,):
        raise ValueError(f"expected {N_LAGS} lag values, got shape {y.shape}")
    if not np.isfinite(y).all():
        raise ValueError("lag values must be finite")
    if weights is LAG_WEIGHTS:
        return float(_SLOPE_C @ y)
    return float(slope_coefficients(weights) @ y)


def calendar_features(ts: datetime | TickIndex):
    """One-hot calendar blocks and the two binary flags for a prediction time."""
    if isinstance(ts, TickIndex):
        ts = ts.timestamp
    month = np.zeros(12)
    month[ts.month - 1] = 1.0
    hour = np.zeros(24)
    hour[ts.hour] = 1.0
    dow = np.zeros(7)
    dow[ts.weekday()] = 1.0
    quarter = np.zeros(4)
    quarter[(ts.month - 1) // 3] = 1.0
    weekend = 1.0 if ts.weekday() >= 5 else 0.0
    evening = 1.0 if (ts.hour >= 20 or ts.hour < 8) else 0.0
    return month, hour, dow, quarter, weekend, evening


def feature_row(frame: SeriesFrame, t: TickIndex | datetime,
                kind: str | AcuityGroup) -> np.ndarray:
    """Assemble the 54-vector for tick t; raises WarmupError without 60min history."""
    i = frame.index_of(t)
    if i < WARMUP_TICKS:
        raise WarmupError(f"tick {t} has only {i} ticks of history; {WARMUP_TICKS} needed")
    series = frame.series(kind)
    lags = series[i - N_LAGS : i][::-1].astype(float)
    month, hour, dow, quarter, weekend, evening = calendar_features(frame.tick(i).timestamp)
    row = np.empty(N_FEATURES)
    row[0:4] = lags
    row[4:16] = month
    row[16:40] = hour
    row[40:47] = dow
    row[47:51] = quarter
    row[51] = weekend
    row[52] = evening
    row[53] = _SLOPE_C @ lags
    return row


def feature_matrix(frame: SeriesFrame, kind: str | AcuityGroup) -> tuple[np.ndarray, np.ndarray]:
    """Rows for every tick with full lag history, i.e. frame indices >= 4.

    Returns (X, ordinals) with X of shape (len(frame) - 4, 54) and ordinals
    the absolute tick ordinal of each row. Vectorised equivalent of calling
    feature_row per tick.
    """
    n = len(frame)
    if n <= WARMUP_TICKS:
        raise WarmupError(f"frame of {n} ticks is shorter than the warm-up of {WARMUP_TICKS}")
    series = frame.series(kind).astype(float)
    m = n - WARMUP_TICKS
    X = np.zeros((m, N_FEATURES))
    for k in range(N_LAGS):
        X[:, k] = series[WARMUP_TICKS - 1 - k : n - 1 - k]

    times = frame.timestamps()[WARMUP_TICKS:]
    months = times.astype("datetime64[M]").astype(int) % 12  # 0 = January
    days = times.astype("datetime64[D]")
    dows = (days.astype(int) + 3) % 7  # 1970-01-01 was a Thursday; 0 = Monday
    hours = (times.astype("datetime64[h]") - days).astype(int)

    rows = np.arange(m)
    X[rows, 4 + months] = 1.0
    X[rows, 16 + hours] = 1.0
    X[rows, 40 + dows] = 1.0
    X[rows, 47 + months // 3] = 1.0
    X[:, 51] = (dows >= 5).astype(float)
    X[:, 52] = ((hours >= 20) | (hours < 8)).astype(float)
    X[:, 53] = X[:, 0:4] @ _SLOPE_C

    ordinals = frame.start + WARMUP_TICKS + rows
    return X, ordinals


def write_feature_csv(X: np.ndarray, target) -> int:
    """Export a feature matrix with the 54 named columns in serialization order."""
    import csv
    from pathlib import Path

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            return write_feature_csv(X, fh)
    writer = csv.writer(target)
    writer.writerow(FEATURE_NAMES)
    for row in np.asarray(X):
        writer.writerow([repr(float(v)) for v in row])
    return len(X)
