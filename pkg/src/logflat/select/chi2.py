"""Chi-square independence test with four selection modes.

P-values come from the regularized upper incomplete gamma function,
implemented directly (series + continued fraction) so the library needs no
statistics dependency; relative accuracy is well inside 1e-10 for the
degrees of freedom this pipeline produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ProcessingError
from ..frame import Frame

MODES = ("numTopFeatures", "percentile", "fpr", "fdr")

_EPS = 1e-16
_ITMAX = 500


def _gamma_series(a: float, x: float) -> float:
    ap = a
    total = 1.0 / a
    delta = total
    for _ in range(_ITMAX):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_fraction(a: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammq(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0.0 or x < 0.0:
        raise ValueError(f"gammq domain error: a={a}, x={x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cont_fraction(a, x)


def chi2_sf(statistic: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if dof <= 0:
        return 1.0
    return min(1.0, max(0.0, gammq(dof / 2.0, statistic / 2.0)))


def chi_square_stat(table: np.ndarray) -> tuple[float, int]:
    """Pearson chi-square statistic and dof of an observed contingency table."""
    table = np.asarray(table, dtype=np.float64)
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    n = table.sum()
    r = int((rows > 0).sum())
    c = int((cols > 0).sum())
    if r < 2 or c < 2 or n == 0:
        return 0.0, 0
    keep_r = rows > 0
    keep_c = cols > 0
    observed = table[np.ix_(keep_r, keep_c)]
    expected = np.outer(rows[keep_r], cols[keep_c]) / n
    stat = float(((observed - expected) ** 2 / expected).sum())
    return stat, (r - 1) * (c - 1)


def benjamini_hochberg(pvalues: list[float], q: float) -> list[int]:
    """Step-up FDR control: indices of selected hypotheses, ascending.

    Select every hypothesis ranked at or below max{i : p(i) <= i*q/m}.
    """
    m = len(pvalues)
    order = sorted(range(m), key=lambda i: (pvalues[i], i))
    cutoff_rank = 0
    for rank, idx in enumerate(order, start=1):
        if pvalues[idx] <= rank * q / m:
            cutoff_rank = rank
    return sorted(order[:cutoff_rank])


@dataclass(frozen=True)
class FeatureChi:
    feature: str
    statistic: float
    dof: int
    p_value: float
    n_rows: int

    def as_dict(self) -> dict:
        return {
            "feature": self.feature,
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "rows": self.n_rows,
        }


@dataclass(frozen=True)
class ChiSquareResult:
    table: tuple
    selected: tuple
    mode: str
    param: float

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "param": self.param,
            "selected": list(self.selected),
            "table": [f.as_dict() for f in self.table],
        }


def _codes(values) -> dict:
    out: dict = {}
    for v in values:
        if v is not None and v not in out:
            out[v] = len(out)
    return out


def chi_square_select(frame: Frame, features: list[str], label: str,
                      mode: str, param: float) -> ChiSquareResult:
    """Test each categorical feature against the label and select.

    Rows with a null in the feature or the label are excluded per feature.
    A feature with a single observed category scores (0, dof 0, p 1).
    """
    if mode not in MODES:
        raise ProcessingError(f"unknown chi-square mode {mode!r}")
    label_col = frame.column(label)
    if len(label_col.distinct_non_null()) < 2:
        raise ProcessingError(f"label {label!r} is constant; no test possible")

    results: list[FeatureChi] = []
    for name in features:
        col = frame.column(name)
        xs, ys = [], []
        for x, y in zip(col.values, label_col.values):
            if x is not None and y is not None:
                xs.append(x)
                ys.append(y)
        x_codes = _codes(xs)
        y_codes = _codes(ys)
        if len(x_codes) < 2 or len(y_codes) < 2:
            results.append(FeatureChi(name, 0.0, 0, 1.0, len(xs)))
            continue
        table = np.zeros((len(x_codes), len(y_codes)), dtype=np.float64)
        for x, y in zip(xs, ys):
            table[x_codes[x], y_codes[y]] += 1.0
        stat, dof = chi_square_stat(table)
        results.append(FeatureChi(name, stat, dof, chi2_sf(stat, dof), len(xs)))

    m = len(results)
    ranking = sorted(range(m),
                     key=lambda i: (results[i].p_value, -results[i].statistic, i))
    if mode == "numTopFeatures":
        k = int(param)
        if k < 1:
            raise ProcessingError("numTopFeatures needs a positive count")
        chosen = ranking[:k]
    elif mode == "percentile":
        if not (0.0 < param <= 1.0):
            raise ProcessingError("percentile fraction must be in (0, 1]")
        chosen = ranking[: math.ceil(param * m)]
    elif mode == "fpr":
        if not (0.0 < param <= 1.0):
            raise ProcessingError("fpr alpha must be in (0, 1]")
        chosen = [i for i in ranking if results[i].p_value < param]
    else:  # fdr
        if not (0.0 < param <= 1.0):
            raise ProcessingError("fdr level must be in (0, 1]")
        picked = set(benjamini_hochberg([r.p_value for r in results], param))
        chosen = [i for i in ranking if i in picked]
    return ChiSquareResult(
        table=tuple(results),
        selected=tuple(results[i].feature for i in chosen),
        mode=mode,
        param=param,
    )
