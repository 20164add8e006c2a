"""Population-stability index against a frozen training reference.

At train time each feature's decile edges and bin proportions are frozen
into the model bundle; at health-check time the live feature rows are
binned with the same edges and PSI = sum((cur - ref) * ln(cur / ref))
is computed per feature, with proportions floored at 1e-4 so empty bins
stay finite. PSI above 0.2 is the conventional "significant shift" alarm
level and the default threshold here.
"""

from __future__ import annotations

import numpy as np

PSI_ALARM_THRESHOLD = 0.2
MAE_ALARM_RATIO = 1.25

#: Features eligible for PSI alarms: the data-driven ones. Calendar one-hots
#: are deterministic functions of the clock and saturate PSI on any window
#: shorter than a year, so they are reported but never alarmed.
ALARMED_FEATURES = ("lag_15m", "lag_30m", "lag_45m", "lag_60m", "trend_slope")

_N_BINS = 10
_PROP_FLOOR = 1e-4


def _bin_edges(col: np.ndarray) -> np.ndarray:
    """Interior decile edges, deduplicated (discrete columns get fewer bins)."""
    edges = np.percentile(col, np.linspace(0, 100, _N_BINS + 1)[1:-1])
    return np.unique(edges)


def _bin_props(col: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # side='left' puts x == edge in the lower bin: (a, b] bins, so a binary
    # column with edges [0, 1] splits into its two populations
    idx = np.searchsorted(edges, col, side="left")
    counts = np.bincount(idx, minlength=len(edges) + 1)
    return counts / col.shape[0]


def psi_reference_doc(X: np.ndarray) -> dict:
    """JSON-ready per-feature reference: decile edges and bin proportions."""
    X = np.asarray(X, dtype=float)
    edges_list, props_list = [], []
    for j in range(X.shape[1]):
        edges = _bin_edges(X[:, j])
        edges_list.append([float(e) for e in edges])
        props_list.append([float(p) for p in _bin_props(X[:, j], edges)])
    return {"edges": edges_list, "props": props_list}


def psi_values(reference: dict, X: np.ndarray) -> np.ndarray:
    """PSI per feature of X against the frozen reference."""
    X = np.asarray(X, dtype=float)
    n_features = len(reference["edges"])
    if X.shape[1] != n_features:
        raise ValueError(f"reference covers {n_features} features, X has {X.shape[1]}")
    out = np.zeros(n_features)
    for j in range(n_features):
        ref = np.maximum(np.asarray(reference["props"][j]), _PROP_FLOOR)
        cur = np.maximum(_bin_props(X[:, j], np.asarray(reference["edges"][j])), _PROP_FLOOR)
        out[j] = float(np.sum((cur - ref) * np.log(cur / ref)))
    return out
