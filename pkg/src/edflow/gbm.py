"""Gradient-boosted regression trees under squared-error loss.

Stage-wise fit of depth-limited trees on residuals, each contribution
scaled by the shrinkage factor; predictions are clamped at zero because
every target is a count. Split search is an exact scan over sorted
distinct feature values (see _kernels); a tree that cannot split stops
the boosting loop and is not retained, so a constant target yields a
base-score-only model.

Missing feature values never occur in training matrices, but at predict
time a NaN is routed to the child that held more training rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._kernels import build_tree
from .rng import Xoshiro256StarStar


@dataclass(frozen=True)
class GbmSpec:
    n_trees: int = 300
    max_depth: int = 3
    shrinkage: float = 0.1
    min_samples_leaf: int = 20
    subsample: float = 1.0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees, max_depth, min_samples_leaf must be positive")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must be in (0, 1]")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")


@dataclass
class Tree:
    feature: np.ndarray  # int32; -1 marks a leaf
    threshold: np.ndarray  # float64; x <= threshold goes left
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # float64; meaningful at leaves
    n_samples: np.ndarray  # int32 training rows per node
    default_left: np.ndarray  # uint8; NaN routing

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf value per row, vectorised level-by-level descent."""
        X = np.asarray(X, dtype=float)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[idx]
            active = np.nonzero(f >= 0)[0]
            if active.size == 0:
                break
            nodes = idx[active]
            v = X[active, f[active]]
            nan = np.isnan(v)
            go_left = (v <= self.threshold[nodes]) | (nan & (self.default_left[nodes] == 1))
            idx[active] = np.where(go_left, self.left[nodes], self.right[nodes])
        return self.value[idx]

    def apply_one(self, x: np.ndarray) -> float:
        i = 0
        while self.feature[i] >= 0:
            v = x[self.feature[i]]
            if np.isnan(v):
                i = self.left[i] if self.default_left[i] else self.right[i]
            elif v <= self.threshold[i]:
                i = self.left[i]
            else:
                i = self.right[i]
        return float(self.value[i])

    def to_nodes(self) -> list[dict]:
        nodes = []
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                nodes.append({"value": float(self.value[i]), "n": int(self.n_samples[i])})
            else:
                nodes.append(
                    {
                        "feature": int(self.feature[i]),
                        "threshold": float(self.threshold[i]),
                        "left": int(self.left[i]),
                        "right": int(self.right[i]),
                        "default_left": bool(self.default_left[i]),
                        "n": int(self.n_samples[i]),
                    }
                )
        return nodes

    @classmethod
    def from_nodes(cls, nodes: list[dict]) -> "Tree":
        n = len(nodes)
        t = cls(
            feature=np.full(n, -1, dtype=np.int32),
            threshold=np.full(n, np.nan),
            left=np.full(n, -1, dtype=np.int32),
            right=np.full(n, -1, dtype=np.int32),
            value=np.zeros(n),
            n_samples=np.zeros(n, dtype=np.int32),
            default_left=np.ones(n, dtype=np.uint8),
        )
        for i, node in enumerate(nodes):
            t.n_samples[i] = node.get("n", 0)
            if "feature" in node:
                t.feature[i] = node["feature"]
                t.threshold[i] = node["threshold"]
                t.left[i] = node["left"]
                t.right[i] = node["right"]
                t.default_left[i] = 1 if node["default_left"] else 0
            else:
                t.value[i] = node["value"]
        return t


@dataclass
class GbmModel:
    base_score: float
    trees: list[Tree]
    spec: GbmSpec
    seed: int = 0
    #: training MSE after each retained stage (diagnostic, not serialized)
    train_mse_by_stage: np.ndarray | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": "gbm",
                "spec": {
                    "n_trees": self.spec.n_trees,
                    "max_depth": self.spec.max_depth,
                    "shrinkage": self.spec.shrinkage,
                    "min_samples_leaf": self.spec.min_samples_leaf,
                    "subsample": self.spec.subsample,
                },
                "seed": self.seed,
                "base_score": self.base_score,
                "trees": [t.to_nodes() for t in self.trees],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GbmModel":
        doc = json.loads(text)
        if doc.get("family") != "gbm":
            raise ValueError(f"not a gbm document: family={doc.get('family')!r}")
        return cls(
            base_score=doc["base_score"],
            trees=[Tree.from_nodes(nodes) for nodes in doc["trees"]],
            spec=GbmSpec(**doc["spec"]),
            seed=doc.get("seed", 0),
        )


def _presort(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature stable sort order and the matching sorted values."""
    p, n = X.shape[1], X.shape[0]
    order = np.empty((p, n), dtype=np.int32)
    vals = np.empty((p, n), dtype=np.float64)
    for j in range(p):
        order[j] = np.argsort(X[:, j], kind="stable")
        vals[j] = X[order[j], j]
    return order, vals


def fit(X, y, spec: GbmSpec = GbmSpec(), seed: int = 0) -> GbmModel:
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if y.shape != (n,):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("X and y must be finite")
    if n < 2 * spec.min_samples_leaf:
        raise ValueError(f"need at least 2*min_samples_leaf = {2 * spec.min_samples_leaf} rows")

    base = float(y.mean())
    pred = np.full(n, base)
    presorted_all, sorted_vals_all = _presort(X)
    rng = Xoshiro256StarStar(seed)
    n_sub = max(1, int(spec.subsample * n)) if spec.subsample < 1.0 else n

    trees: list[Tree] = []
    mse_path: list[float] = []
    for _ in range(spec.n_trees):
        residual = y - pred
        if spec.subsample < 1.0:
            in_sample = np.zeros(n, dtype=bool)
            in_sample[rng.sample_indices(n, n_sub)] = True
            keep = in_sample[presorted_all]
            presorted = presorted_all[keep].reshape(X.shape[1], n_sub)
            sorted_vals = sorted_vals_all[keep].reshape(X.shape[1], n_sub)
        else:
            presorted = presorted_all
            sorted_vals = sorted_vals_all
        arrays = build_tree(X, presorted, sorted_vals, residual,
                            spec.max_depth, spec.min_samples_leaf)
        tree = Tree(**arrays)
        if tree.n_nodes == 1:
            break  # nothing left to fit; do not retain a constant tree
        pred = pred + spec.shrinkage * tree.apply(X)
        trees.append(tree)
        err = y - pred
        mse_path.append(float((err @ err) / n))

    return GbmModel(
        base_score=base,
        trees=trees,
        spec=spec,
        seed=seed,
        train_mse_by_stage=np.array(mse_path),
    )


def predict(model: GbmModel, x) -> float:
    """base + shrinkage * sum of tree outputs, clamped at zero."""
    x = np.asarray(x, dtype=float)
    total = model.base_score + model.spec.shrinkage * sum(
        t.apply_one(x) for t in model.trees
    )
    return max(total, 0.0)


def predict_matrix(model: GbmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    total = np.full(X.shape[0], model.base_score)
    for t in model.trees:
        total += model.spec.shrinkage * t.apply(X)
    return np.maximum(total, 0.0)
