"""Single-value pruning, Pearson correlation, correlation-driven column
dropping, and category-subset partitioning."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from ..errors import KindError, ProcessingError
from ..frame import Column, Frame
from ..schema import render_scalar

NUMERIC_KINDS = ("int", "float", "timestamp", "bool")


def drop_single_valued(frame: Frame) -> tuple[Frame, list[dict]]:
    """Remove every column with at most one distinct non-null value."""
    drops = []
    keep = []
    for col in frame.columns:
        distinct = col.distinct_non_null()
        if len(distinct) == 0:
            drops.append({"column": col.name, "reason": "all_null"})
        elif len(distinct) == 1:
            drops.append({"column": col.name, "reason": "single_valued"})
        else:
            keep.append(col)
    return Frame(frame.name, tuple(keep)), drops


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple
    r: tuple  # row tuples; None marks undefined entries

    def value(self, i: int, j: int):
        return self.r[i][j]

    def defined(self, i: int, j: int) -> bool:
        return self.r[i][j] is not None

    def pairs_above(self, threshold: float) -> list[tuple]:
        """(|r|, label_i, label_j, i, j) for defined pairs with |r| >= threshold,
        strongest first, ties in lexicographic pair order."""
        out = []
        for i in range(len(self.labels)):
            for j in range(i + 1, len(self.labels)):
                rij = self.r[i][j]
                if rij is not None and abs(rij) >= threshold:
                    out.append((abs(rij), self.labels[i], self.labels[j], i, j))
        out.sort(key=lambda t: (-t[0], t[1], t[2]))
        return out


def _numeric_array(frame: Frame, name: str) -> np.ndarray:
    col = frame.column(name)
    if col.kind not in NUMERIC_KINDS:
        raise KindError(f"column {name!r} is {col.kind}, not numeric")
    return np.array([float(v) if v is not None else np.nan for v in col.values],
                    dtype=np.float64)


def pearson_matrix(frame: Frame, columns: list[str]) -> CorrelationMatrix:
    """Sample-moment Pearson r over pairwise-complete rows.

    Entries are undefined (None) when a column is constant over the pair's
    complete rows or fewer than two complete pairs exist.
    """
    arrays = [_numeric_array(frame, name) for name in columns]
    masks = [~np.isnan(a) for a in arrays]
    p = len(columns)
    r: list[list] = [[None] * p for _ in range(p)]
    for i in range(p):
        for j in range(i, p):
            both = masks[i] & masks[j]
            n = int(both.sum())
            if n < 2:
                continue
            x = arrays[i][both]
            y = arrays[j][both]
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            if i == j:
                r[i][j] = 1.0
                continue
            xc = x - x.mean()
            yc = y - y.mean()
            denom = sqrt(float(xc @ xc) * float(yc @ yc))
            if denom == 0.0:
                continue
            rij = float(xc @ yc) / denom
            rij = max(-1.0, min(1.0, rij))
            r[i][j] = rij
            r[j][i] = rij
    return CorrelationMatrix(tuple(columns), tuple(tuple(row) for row in r))


def prune_by_correlation(matrix: CorrelationMatrix, threshold: float):
    """Greedy pruning of highly correlated pairs.

    Visits pairs with |r| >= threshold strongest first; from each pair still
    alive, drops the member with the larger mean |r| against the remaining
    columns (tie: the lexicographically later name). Returns
    (drops, kept_labels); drops are (dropped, kept_partner, r) triples.
    """
    if not (0.0 < threshold <= 1.0):
        raise ProcessingError(f"pearson threshold {threshold} outside (0, 1]")
    labels = matrix.labels
    alive = dict.fromkeys(labels)
    drops: list[tuple] = []

    def mean_abs(i: int) -> float:
        total = 0.0
        count = 0
        for k, lab in enumerate(labels):
            if lab not in alive or k == i:
                continue
            rik = matrix.r[i][k]
            if rik is not None:
                total += abs(rik)
                count += 1
        return total / count if count else 0.0

    for _, label_i, label_j, i, j in matrix.pairs_above(threshold):
        if label_i not in alive or label_j not in alive:
            continue
        mi, mj = mean_abs(i), mean_abs(j)
        if mi > mj:
            victim, kept = (label_i, label_j)
        elif mj > mi:
            victim, kept = (label_j, label_i)
        else:
            victim, kept = ((label_j, label_i) if label_j > label_i else (label_i, label_j))
        del alive[victim]
        drops.append((victim, kept, matrix.r[i][j]))
    return drops, [lab for lab in labels if lab in alive]


def partition_by_category(frame: Frame, column: str, max_categories: int = 4):
    """Binarized sub-frames for every non-empty proper subset of categories.

    n distinct categories yield 2**n - 2 frames, each carrying an in_<subset>
    indicator column (null category counts as outside every subset).
    """
    col = frame.column(column)
    categories = sorted(col.distinct_non_null(), key=render_scalar)
    n = len(categories)
    if n > max_categories:
        raise ProcessingError(
            f"column {column!r} has {n} categories, above the limit of "
            f"{max_categories}; raise max_categories or pick a smaller column"
        )
    taken = set(frame.names)
    out = []
    for bits in range(1, (1 << n) - 1):
        subset = tuple(categories[k] for k in range(n) if bits >> k & 1)
        member = set(subset)
        label = ",".join(render_scalar(c) for c in subset)
        name = "in_" + "_".join(render_scalar(c) for c in subset)
        suffix = 1
        base = name
        while name in taken:
            suffix += 1
            name = f"{base}_{suffix}"
        indicator = Column(name, "int", tuple(
            1 if v is not None and v in member else 0 for v in col.values
        ))
        out.append((label, frame.append(indicator)))
    return out
