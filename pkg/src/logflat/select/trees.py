"""CART decision trees and a bagged forest for feature importance.

Splits minimize Gini impurity: numeric features split at midpoints between
sorted distinct values, categorical features one-vs-rest on a category.
Importance is the total weighted impurity decrease per feature, normalized
to sum 1. Every random draw flows from one seed, so a forest run is bitwise
reproducible.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from ..errors import ProcessingError
from ..frame import Frame

_MIN_GAIN = 1e-12

CATEGORICAL_KINDS = ("text", "bool")
NUMERIC_KINDS = ("int", "float", "timestamp")


@dataclass(frozen=True)
class _Leaf:
    prediction: int


@dataclass(frozen=True)
class _Split:
    feature: int
    threshold: float | None  # numeric midpoint, or None for categorical
    category: int | None  # category code for one-vs-rest splits
    left: object
    right: object


class TreeModel:
    def __init__(self, root, features, kinds, categories, classes):
        self.root = root
        self.features = features
        self.kinds = kinds
        self.categories = categories
        self.classes = classes

    def predict_codes(self, xcols) -> np.ndarray:
        n = len(xcols[0]) if xcols else 0
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            node = self.root
            while isinstance(node, _Split):
                v = xcols[node.feature][i]
                if node.threshold is not None:
                    node = node.left if v <= node.threshold else node.right
                else:
                    node = node.left if v == node.category else node.right
            out[i] = node.prediction
        return out


class ForestModel:
    """Bagged CART ensemble; n_trees=1 with bootstrap off is the plain tree."""

    def __init__(self, trees, features, kinds, categories, classes, importances):
        self.trees = trees
        self.features = features
        self.kinds = kinds
        self.categories = categories
        self.classes = classes
        self.importances = importances  # dict feature -> float

    def predict(self, frame: Frame) -> list:
        xcols, _ = _feature_arrays(frame, self.features, self.kinds, self.categories)
        votes = np.zeros((frame.row_count, len(self.classes)), dtype=np.int64)
        for tree in self.trees:
            codes = tree.predict_codes(xcols)
            votes[np.arange(len(codes)), codes] += 1
        best = votes.argmax(axis=1)  # argmax takes the first max: deterministic
        return [self.classes[b] for b in best]


def _feature_arrays(frame: Frame, features, kinds, categories):
    xcols = []
    null_mask = np.zeros(frame.row_count, dtype=bool)
    for name in features:
        col = frame.column(name)
        if kinds[name] == "categorical":
            codes = categories[name]
            values = np.array(
                [codes.get(v, -1) if v is not None else -1 for v in col.values],
                dtype=np.float64,
            )
            null_mask |= np.array([v is None for v in col.values])
        else:
            values = np.array(
                [float(v) if v is not None else np.nan for v in col.values],
                dtype=np.float64,
            )
            null_mask |= np.isnan(values)
        xcols.append(values)
    return xcols, null_mask


def _gini(counts: np.ndarray, n: int) -> float:
    if n == 0:
        return 0.0
    fractions = counts / n
    return 1.0 - float((fractions * fractions).sum())


def _best_split(xcols, kinds_code, y, idx, feature_ids, k):
    """Best (gain, feature, threshold, category, left_idx, right_idx) at a node."""
    n = len(idx)
    counts = np.bincount(y[idx], minlength=k)
    parent = _gini(counts, n)
    if parent == 0.0:
        return None
    best = None
    y_node = y[idx]
    onehot = np.zeros((n, k), dtype=np.float64)
    onehot[np.arange(n), y_node] = 1.0
    for f in feature_ids:
        values = xcols[f][idx]
        if kinds_code[f]:  # categorical one-vs-rest
            for cat in np.unique(values):
                left = values == cat
                n_left = int(left.sum())
                if n_left == 0 or n_left == n:
                    continue
                left_counts = onehot[left].sum(axis=0)
                right_counts = counts - left_counts
                weighted = (n_left * _gini(left_counts, n_left)
                            + (n - n_left) * _gini(right_counts, n - n_left)) / n
                gain = parent - weighted
                if best is None or gain > best[0] + _MIN_GAIN:
                    best = (gain, f, None, float(cat), left)
        else:
            order = np.argsort(values, kind="mergesort")
            sv = values[order]
            boundaries = np.nonzero(sv[:-1] != sv[1:])[0]
            if boundaries.size == 0:
                continue
            cum = onehot[order].cumsum(axis=0)
            n_left = boundaries + 1
            left_counts = cum[boundaries]
            right_counts = counts - left_counts
            gini_left = 1.0 - ((left_counts / n_left[:, None]) ** 2).sum(axis=1)
            n_right = n - n_left
            gini_right = 1.0 - ((right_counts / n_right[:, None]) ** 2).sum(axis=1)
            weighted = (n_left * gini_left + n_right * gini_right) / n
            gains = parent - weighted
            b = int(np.argmax(gains))
            gain = float(gains[b])
            if best is None or gain > best[0] + _MIN_GAIN:
                threshold = (sv[boundaries[b]] + sv[boundaries[b] + 1]) / 2.0
                left = values <= threshold
                best = (gain, f, threshold, None, left)
    if best is None or best[0] <= _MIN_GAIN:
        return None
    return best


def _grow(xcols, kinds_code, y, idx, depth, max_depth, k, n_total,
          rng, m_try, importance):
    counts = np.bincount(y[idx], minlength=k)
    prediction = int(np.argmax(counts))
    if depth >= max_depth or len(idx) < 2:
        return _Leaf(prediction)
    p = len(xcols)
    if m_try is not None and m_try < p:
        feature_ids = sorted(rng.sample(range(p), m_try))
    else:
        feature_ids = range(p)
    found = _best_split(xcols, kinds_code, y, idx, feature_ids, k)
    if found is None:
        return _Leaf(prediction)
    gain, f, threshold, category, left_mask = found
    importance[f] += (len(idx) / n_total) * gain
    left_idx = idx[left_mask]
    right_idx = idx[~left_mask]
    left = _grow(xcols, kinds_code, y, left_idx, depth + 1, max_depth, k,
                 n_total, rng, m_try, importance)
    right = _grow(xcols, kinds_code, y, right_idx, depth + 1, max_depth, k,
                  n_total, rng, m_try, importance)
    return _Split(f, threshold, category, left, right)


def fit_forest(frame: Frame, features: list[str], label: str, cfg) -> ForestModel:
    """Train the forest described by cfg (n_trees, tree_max_depth, seed,
    bootstrap). Rows with a null label or a null in any feature are excluded."""
    if not features:
        raise ProcessingError("empty feature set")
    label_col = frame.column(label)
    classes = sorted(label_col.distinct_non_null(), key=repr)
    if len(classes) < 2:
        raise ProcessingError(f"label {label!r} is constant")
    class_codes = {c: i for i, c in enumerate(classes)}

    kinds = {}
    categories = {}
    for name in features:
        col = frame.column(name)
        if col.kind in CATEGORICAL_KINDS:
            kinds[name] = "categorical"
            cats = sorted(col.distinct_non_null(), key=repr)
            categories[name] = {c: i for i, c in enumerate(cats)}
        elif col.kind in NUMERIC_KINDS:
            kinds[name] = "numeric"
        else:
            raise ProcessingError(f"feature {name!r} has unusable kind {col.kind}")

    xcols_full, null_mask = _feature_arrays(frame, features, kinds, categories)
    y_full = np.array(
        [class_codes[v] if v is not None else -1 for v in label_col.values],
        dtype=np.int64,
    )
    usable = (~null_mask) & (y_full >= 0)
    if int(usable.sum()) < 2:
        raise ProcessingError("fewer than two usable rows after null exclusion")
    xcols = [x[usable] for x in xcols_full]
    y = y_full[usable]
    n = len(y)
    k = len(classes)
    kinds_code = [kinds[name] == "categorical" for name in features]

    n_trees = max(1, int(cfg.n_trees))
    max_depth = int(cfg.tree_max_depth)
    bootstrap = bool(getattr(cfg, "bootstrap", True))
    master = random.Random(cfg.seed)
    tree_seeds = [master.randrange(2**63) for _ in range(n_trees)]

    p = len(features)
    m_try = math.ceil(math.sqrt(p)) if bootstrap else None
    total_importance = np.zeros(p, dtype=np.float64)
    trees = []
    for ts in tree_seeds:
        rng = random.Random(ts)
        if bootstrap:
            sample = np.array([rng.randrange(n) for _ in range(n)], dtype=np.int64)
        else:
            sample = np.arange(n, dtype=np.int64)
        importance = np.zeros(p, dtype=np.float64)
        root = _grow(xcols, kinds_code, y, sample, 0, max_depth, k, len(sample),
                     rng, m_try, importance)
        total_importance += importance
        trees.append(TreeModel(root, features, kinds, categories, classes))

    total = float(total_importance.sum())
    if total > 0.0:
        normalized = total_importance / total
    else:
        normalized = total_importance
    importances = {name: float(normalized[i]) for i, name in enumerate(features)}
    return ForestModel(trees, features, kinds, categories, classes, importances)


def tree_importance(frame: Frame, features: list[str], label: str, cfg) -> dict:
    """Feature importances from the configured tree/forest run."""
    return fit_forest(frame, features, label, cfg).importances


def pseudo_label_importances(frame: Frame, cfg, features: list[str] | None = None) -> dict:
    """The unlabeled recipe: try every categorical column with between 2 and
    max_categories categories as the label; report per-label importances and
    their mean."""
    columns = features if features is not None else frame.names
    candidates = []
    for name in columns:
        col = frame.column(name)
        if col.kind not in CATEGORICAL_KINDS:
            continue
        k = len(col.distinct_non_null())
        if 2 <= k <= cfg.max_categories:
            candidates.append(name)
    per_label = {}
    for label in candidates:
        feats = [n for n in columns
                 if n != label and frame.column(n).kind in CATEGORICAL_KINDS + NUMERIC_KINDS]
        if not feats:
            continue
        try:
            per_label[label] = tree_importance(frame, feats, label, cfg)
        except ProcessingError:
            continue
    aggregate: dict[str, float] = {}
    counts: dict[str, int] = {}
    for vector in per_label.values():
        for name, value in vector.items():
            aggregate[name] = aggregate.get(name, 0.0) + value
            counts[name] = counts.get(name, 0) + 1
    mean = {name: aggregate[name] / counts[name] for name in aggregate}
    return {"labels": per_label, "mean": mean}
