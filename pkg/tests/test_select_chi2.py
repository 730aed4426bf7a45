import math
import random
from collections import Counter

import pytest
import scipy.stats

from logflat.errors import ProcessingError
from logflat.frame import build_frame
from logflat.select import benjamini_hochberg, chi2_sf, chi_square_select, gammq


def test_gammq_against_scipy_grid():
    for dof in list(range(1, 21)) + [40, 70, 100]:
        for stat in (0.0, 0.01, 0.5, 1.0, float(dof), 2.0 * dof, 5.0 * dof, 300.0):
            ours = chi2_sf(stat, dof)
            ref = float(scipy.stats.chi2.sf(stat, dof))
            if ref > 1e-280:
                assert abs(ours - ref) <= 1e-10 * max(ref, 1e-10), (dof, stat)
            else:
                assert ours <= 1e-270


def test_gammq_domain():
    with pytest.raises(ValueError):
        gammq(-1.0, 1.0)
    assert gammq(2.0, 0.0) == 1.0


def _frame_from_pairs(pairs):
    return build_frame("t", [{"f": x, "label": y} for x, y in pairs])


def test_independent_balanced_feature_scores_zero():
    pairs = [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")] * 25
    result = chi_square_select(_frame_from_pairs(pairs), ["f"], "label",
                               "numTopFeatures", 1)
    feature = result.table[0]
    assert feature.statistic == 0.0
    assert feature.dof == 1
    assert feature.p_value == 1.0


def test_feature_identical_to_binary_label():
    # 2x2 table with diagonal 50/50: chi-square equals n
    pairs = [("a", "a")] * 50 + [("b", "b")] * 50
    result = chi_square_select(_frame_from_pairs(pairs), ["f"], "label",
                               "numTopFeatures", 1)
    feature = result.table[0]
    assert abs(feature.statistic - 100.0) < 1e-9
    assert feature.dof == 1


def test_single_category_feature_convention():
    pairs = [("only", "x")] * 10 + [("only", "y")] * 10
    result = chi_square_select(_frame_from_pairs(pairs), ["f"], "label", "fpr", 0.5)
    feature = result.table[0]
    assert (feature.statistic, feature.dof, feature.p_value) == (0.0, 0, 1.0)
    assert result.selected == ()


def test_constant_label_errors():
    pairs = [("a", "x"), ("b", "x")] * 5
    with pytest.raises(ProcessingError):
        chi_square_select(_frame_from_pairs(pairs), ["f"], "label",
                          "numTopFeatures", 1)


def test_permuting_rows_changes_nothing():
    rng = random.Random(5)
    pairs = [(rng.choice("abc"), rng.choice("xy")) for _ in range(200)]
    shuffled = pairs[:]
    rng.shuffle(shuffled)
    r1 = chi_square_select(_frame_from_pairs(pairs), ["f"], "label", "fpr", 0.1)
    r2 = chi_square_select(_frame_from_pairs(shuffled), ["f"], "label", "fpr", 0.1)
    assert r1.table[0].statistic == r2.table[0].statistic
    assert r1.table[0].p_value == r2.table[0].p_value


def test_nulls_excluded_per_feature():
    pairs = [("a", "x")] * 30 + [("b", "y")] * 30 + [(None, "x")] * 5 + [("a", None)] * 5
    result = chi_square_select(_frame_from_pairs(pairs), ["f"], "label",
                               "numTopFeatures", 1)
    assert result.table[0].n_rows == 60


# --------------------------------------------------------------------------
# oracle equivalence on random contingency data


def _random_feature_frame(rng, n_features=10, n_rows=400):
    rows = []
    label_cats = ["L0", "L1", "L2"][: rng.randrange(2, 4)]
    feature_cats = {}
    biased = set(rng.sample(range(n_features), 3))
    for f in range(n_features):
        feature_cats[f] = [f"v{k}" for k in range(rng.randrange(2, 5))]
    for _ in range(n_rows):
        label = rng.choice(label_cats)
        row = {"label": label}
        for f in range(n_features):
            cats = feature_cats[f]
            if f in biased:  # label-dependent feature
                idx = (label_cats.index(label) + (0 if rng.random() < 0.7 else 1)) % len(cats)
                row[f"f{f}"] = cats[idx]
            else:
                row[f"f{f}"] = rng.choice(cats)
        rows.append(row)
    return build_frame("t", rows)


def _oracle_stats(frame, features, label):
    """scipy-based oracle: statistic, dof, p per feature."""
    out = []
    label_values = frame.column(label).values
    for name in features:
        xs = frame.column(name).values
        table = Counter((x, y) for x, y in zip(xs, label_values)
                        if x is not None and y is not None)
        x_cats = sorted({x for x, _ in table})
        y_cats = sorted({y for _, y in table})
        observed = [[table.get((x, y), 0) for y in y_cats] for x in x_cats]
        if len(x_cats) < 2 or len(y_cats) < 2:
            out.append((0.0, 0, 1.0))
            continue
        stat, p, dof, _ = scipy.stats.chi2_contingency(observed, correction=False)
        out.append((float(stat), int(dof), float(p)))
    return out


def test_oracle_equivalence_50_random_frames():
    rng = random.Random(101)
    for trial in range(50):
        frame = _random_feature_frame(rng)
        features = [f"f{i}" for i in range(10)]
        result = chi_square_select(frame, features, "label", "numTopFeatures", 3)
        oracle = _oracle_stats(frame, features, "label")
        for feat, (stat, dof, p) in zip(result.table, oracle):
            assert abs(feat.statistic - stat) < 1e-8, trial
            assert feat.dof == dof
            assert abs(feat.p_value - p) < 1e-8

        pvalues = [p for _, _, p in oracle]
        ranked = sorted(range(10), key=lambda i: (pvalues[i], i))

        for mode, param, expected in (
            ("numTopFeatures", 4, set(ranked[:4])),
            ("percentile", 0.3, set(ranked[: math.ceil(0.3 * 10)])),
            ("fpr", 0.05, {i for i in range(10) if pvalues[i] < 0.05}),
        ):
            got = chi_square_select(frame, features, "label", mode, param)
            assert {features.index(s) for s in got.selected} == expected, (trial, mode)

        # independent BH step-up oracle
        order = sorted(range(10), key=lambda i: (pvalues[i], i))
        k = 0
        for rank, i in enumerate(order, 1):
            if pvalues[i] <= rank * 0.1 / 10:
                k = rank
        expected_fdr = set(order[:k])
        got = chi_square_select(frame, features, "label", "fdr", 0.1)
        assert {features.index(s) for s in got.selected} == expected_fdr, trial


def test_benjamini_hochberg_step_up_fixture():
    # i3 fails its threshold but i5 passes, so step-up selects ranks 1..5
    pvalues = [0.001, 0.02, 0.031, 0.04, 0.049, 0.3, 0.35, 0.4, 0.45, 0.5]
    assert benjamini_hochberg(pvalues, 0.1) == [0, 1, 2, 3, 4]
    # nothing passes
    assert benjamini_hochberg([0.5, 0.9], 0.05) == []
    # everything passes
    assert benjamini_hochberg([0.001, 0.002], 0.05) == [0, 1]
    # unsorted input, answer in original indices
    pvalues = [0.04, 0.001, 0.9, 0.02]
    assert benjamini_hochberg(pvalues, 0.1) == [0, 1, 3]


def test_selected_ordering_follows_p_value():
    rng = random.Random(55)
    frame = _random_feature_frame(rng)
    features = [f"f{i}" for i in range(10)]
    result = chi_square_select(frame, features, "label", "numTopFeatures", 10)
    ps = {f.feature: f.p_value for f in result.table}
    listed = [ps[name] for name in result.selected]
    assert listed == sorted(listed)
