"""Gradient-boosted regression trees, built from scratch.

The surrogate maps parameter vectors to their distance label. Boosting is
plain least squares: start from the label mean, then repeatedly fit a
depth-limited tree to the residuals and add it with shrinkage. Splits are
found by exact greedy search over all feature/threshold midpoints (three
features and a few thousand rows make that affordable) with an L2 penalty
on leaf weights: leaf value = sum(residuals) / (count + l2_leaf).

Ties in the split search break deterministically: highest gain, then
lowest feature index, then lowest threshold. Rows with feature value below
the threshold go left.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import backend

__all__ = [
    "GbtHyperParams",
    "GbtModel",
    "clip_labels",
    "fit",
    "predict",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class GbtHyperParams:
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    l2_leaf: float = 1.0
    min_child_weight: float = 1.0
    subsample: float = 0.8

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1:
            raise ValueError("n_trees and max_depth must be at least 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.l2_leaf < 0 or self.min_child_weight < 0:
            raise ValueError("l2_leaf and min_child_weight must be non-negative")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must lie in (0, 1]")


@dataclass
class _Tree:
    """Flat node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            goes_left = x[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(goes_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]


@dataclass
class GbtModel:
    base_prediction: float
    learning_rate: float
    n_features: int
    trees: list = field(default_factory=list)


def clip_labels(y, ceiling: float = 1.0) -> np.ndarray:
    """Cap labels at the ceiling so outliers cannot dominate training."""
    if not ceiling > 0:
        raise ValueError("ceiling must be positive")
    return np.minimum(np.asarray(y, dtype=np.float64), ceiling)


class _TreeBuilder:
    def __init__(self, x, sort_order, hyper):
        self.x = x
        self.sort_order = sort_order  # per feature, row indices sorted by value
        self.hyper = hyper
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def build(self, rows: np.ndarray, residuals: np.ndarray) -> int:
        return self._grow(rows, residuals, depth=0)

    def _grow(self, rows, residuals, depth):
        h = self.hyper
        best = None  # (gain, feat, threshold, n_left)
        if depth < h.max_depth and len(rows) >= 2:
            in_node = np.zeros(len(self.x), dtype=bool)
            in_node[rows] = True
            res = np.empty(len(self.x))
            res[rows] = residuals
            for feat in range(self.x.shape[1]):
                order = self.sort_order[feat]
                node_order = order[in_node[order]]
                gain, threshold, n_left = backend.kernels.best_split(
                    np.ascontiguousarray(self.x[node_order, feat]),
                    np.ascontiguousarray(res[node_order]),
                    h.l2_leaf,
                    h.min_child_weight,
                )
                if gain > 0.0 and (best is None or gain > best[0]):
                    best = (gain, feat, threshold, node_order)
        if best is None:
            node = self._new_node()
            self.feature[node] = -1
            self.value[node] = residuals.sum() / (len(rows) + h.l2_leaf)
            return node
        _, feat, threshold, node_order = best
        goes_left = self.x[node_order, feat] < threshold
        left_rows = node_order[goes_left]
        right_rows = node_order[~goes_left]
        node = self._new_node()
        res_all = np.empty(len(self.x))
        res_all[rows] = residuals
        left = self._grow(left_rows, res_all[left_rows], depth + 1)
        right = self._grow(right_rows, res_all[right_rows], depth + 1)
        self.feature[node] = feat
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right
        return node

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finish(self) -> _Tree:
        return _Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value),
        )


def fit(x, y, hyper: GbtHyperParams = GbtHyperParams(), seed=None) -> GbtModel:
    """Train the boosted ensemble on rows x with labels y.

    Deterministic given seed; the seed only drives the per-round row
    subsample. Labels must be finite (clip them first if needed).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("x must be an n x d matrix aligned with y")
    if len(y) < 2:
        raise ValueError("need at least 2 training rows")
    if not np.isfinite(y).all():
        raise ValueError("labels must be finite")
    n, d = x.shape
    rng = np.random.default_rng(seed)
    sort_order = [np.argsort(x[:, j], kind="stable") for j in range(d)]
    model = GbtModel(base_prediction=float(y.mean()), learning_rate=hyper.learning_rate,
                     n_features=d)
    current = np.full(n, model.base_prediction)
    n_sub = max(2, int(round(hyper.subsample * n)))
    for _ in range(hyper.n_trees):
        if n_sub < n:
            rows = np.sort(rng.permutation(n)[:n_sub])
        else:
            rows = np.arange(n)
        builder = _TreeBuilder(x, sort_order, hyper)
        builder.build(rows, y[rows] - current[rows])
        tree = builder.finish()
        model.trees.append(tree)
        current += hyper.learning_rate * tree.predict(x)
    return model


def predict(model: GbtModel, x, n_trees: int | None = None) -> np.ndarray:
    """Ensemble prediction; n_trees truncates to the first rounds."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {x.shape}")
    out = np.full(len(x), model.base_prediction)
    trees = model.trees if n_trees is None else model.trees[:n_trees]
    for tree in trees:
        out += model.learning_rate * tree.predict(x)
    return out


def _node_to_dict(tree: _Tree, node: int) -> dict:
    if tree.feature[node] < 0:
        return {"value": float(tree.value[node])}
    return {
        "feature": int(tree.feature[node]),
        "threshold": float(tree.threshold[node]),
        "left": _node_to_dict(tree, int(tree.left[node])),
        "right": _node_to_dict(tree, int(tree.right[node])),
    }


def _tree_from_dict(root: dict) -> _Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def add(d: dict) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if "value" in d:
            value[node] = float(d["value"])
        else:
            feature[node] = int(d["feature"])
            threshold[node] = float(d["threshold"])
            left[node] = add(d["left"])
            right[node] = add(d["right"])
        return node

    add(root)
    return _Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value),
    )


def model_to_dict(model: GbtModel) -> dict:
    """JSON-ready form: trees as nested {feature, threshold, left, right}
    nodes with {value} leaves."""
    return {
        "kind": "gbt-regressor",
        "version": 1,
        "base_prediction": model.base_prediction,
        "learning_rate": model.learning_rate,
        "n_features": model.n_features,
        "trees": [_node_to_dict(t, 0) for t in model.trees],
    }


def model_from_dict(payload: dict) -> GbtModel:
    if payload.get("kind") != "gbt-regressor":
        raise ValueError("not a serialized gbt-regressor")
    return GbtModel(
        base_prediction=float(payload["base_prediction"]),
        learning_rate=float(payload["learning_rate"]),
        n_features=int(payload["n_features"]),
        trees=[_tree_from_dict(t) for t in payload["trees"]],
    )


def save_model(model: GbtModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)


def load_model(path) -> GbtModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
