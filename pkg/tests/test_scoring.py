import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmetamodes.distance import record_to_metamode
from kmetamodes.ensemble import EnsembleConfig, fit_ensemble
from kmetamodes.errors import MetricError, ScoringError
from kmetamodes.model import Metamode
from kmetamodes.persist import KMetamodesModel
from kmetamodes.scoring import (
    ScoredDataset,
    auc,
    operating_point,
    pr_curve,
    recall_by_category,
    roc_curve,
    score_records,
    trapezoid_auc,
)
from kmetamodes.synthetic import planted_outliers


def _model(metamodes, modes=(), kind="meta_frequency", record_modes=None):
    return KMetamodesModel(list(modes), list(metamodes), {}, "frequency", kind, record_modes=record_modes)


def test_pure_metamode_equal_to_record_scores_zero():
    model = _model([Metamode(({0: 3}, {1: 3}), 3)])
    s = score_records(np.array([[0, 1]]), model, "record_to_metamodes")
    assert s.scores[0] == 0.0


def test_two_metamode_score_is_sum():
    z0 = Metamode(({0: 2},), 2)
    z1 = Metamode(({1: 2},), 2)
    x = np.array([[0]])
    expected = record_to_metamode(x[0], z0, "meta_frequency") + record_to_metamode(x[0], z1, "meta_frequency")
    assert expected == pytest.approx(math.sqrt(2))
    s = score_records(x, _model([z0, z1]), "record_to_metamodes")
    assert s.scores[0] == pytest.approx(math.sqrt(2), abs=1e-12)
    s_min = score_records(x, _model([z0, z1]), "record_to_metamodes", agg="min")
    assert s_min.scores[0] == 0.0


def test_record_scores_match_scalar_definition_for_both_distances():
    rng = np.random.default_rng(0)
    x, _ = planted_outliers(n=1500, m=6, seed=2)
    for kind in ("frequency", "meta_frequency"):
        res = fit_ensemble(x, EnsembleConfig(sample_size=500, k=5, k_meta=3, stage2_distance=kind))
        model = KMetamodesModel.from_result(res, EnsembleConfig(sample_size=500, stage2_distance=kind))
        s = score_records(x, model, "record_to_metamodes").scores
        for i in rng.integers(0, len(x), size=25):
            ref = sum(record_to_metamode(x[i], z, kind) for z in model.metamodes)
            assert s[i] == pytest.approx(ref, abs=1e-9)


@pytest.fixture(scope="module")
def fitted():
    x, y = planted_outliers(n=3000, m=8, seed=3)
    cfg = EnsembleConfig(sample_size=600, k=8, k_meta=6)
    res = fit_ensemble(x, cfg)
    return x, y, res, KMetamodesModel.from_result(res, cfg)


def test_mode_variant_shares_score_within_stage1_cluster(fitted):
    x, y, res, model = fitted
    s = score_records(x, model, "mode_to_metamodes", labels=y).scores
    for mid in np.unique(res.record_modes):
        assert len(np.unique(s[res.record_modes == mid])) == 1


def test_mode_variant_requires_cover_all_assignments(fitted):
    x, _, res, model = fitted
    bare = _model(model.metamodes, model.modes)
    with pytest.raises(ScoringError):
        score_records(x, bare, "mode_to_metamodes")
    with pytest.raises(ScoringError):
        score_records(x[:10], model, "mode_to_metamodes")
    partial = res.record_modes.copy()
    partial[0] = -1
    with pytest.raises(ScoringError):
        score_records(x, model, "mode_to_metamodes", record_modes=partial)


def test_scored_dataset_rejects_length_mismatch():
    with pytest.raises(MetricError):
        ScoredDataset([1.0, 2.0], [1])


# -- metrics ----------------------------------------------------------------


def _enumerate_roc(scores, labels):
    """Thresholds by hand: flag score >= t for each distinct t, descending."""
    pos = sum(labels)
    neg = len(labels) - pos
    pts = [(0.0, 0.0)]
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, l in zip(scores, labels) if s >= t and l)
        fp = sum(1 for s, l in zip(scores, labels) if s >= t and not l)
        pts.append((fp / neg, tp / pos))
    return pts


def test_roc_hand_staircase():
    scores, labels = [3, 2, 1, 0], [1, 1, 0, 0]
    fpr, tpr, thr = roc_curve(ScoredDataset(scores, labels))
    expected = _enumerate_roc(scores, labels)
    assert expected == [(0, 0), (0, 0.5), (0, 1), (0.5, 1), (1, 1)]
    assert list(zip(fpr, tpr)) == expected
    np.testing.assert_array_equal(thr, [np.inf, 3, 2, 1, 0])


def test_pr_hand_staircase():
    recall, precision, _ = pr_curve(ScoredDataset([3, 2, 1, 0], [1, 1, 0, 0]))
    # thresholds 3, 2, 1, 0 flag 1, 2, 3, 4 records
    np.testing.assert_allclose(recall, [0, 0.5, 1, 1, 1])
    np.testing.assert_allclose(precision, [1, 1, 1, 2 / 3, 0.5])


def test_perfect_separation():
    s = ScoredDataset([0.9, 0.8, 0.2, 0.1, 0.05], [1, 1, 0, 0, 0])
    fpr, tpr, _ = roc_curve(s)
    assert (0.0, 1.0) in set(zip(fpr, tpr))
    assert auc(s) == 1.0
    recall, precision, _ = pr_curve(s)
    # both positives are flagged before any negative
    np.testing.assert_array_equal(recall[:3], [0, 0.5, 1])
    np.testing.assert_array_equal(precision[:3], [1, 1, 1])


def test_auc_hand_ranking_and_ties():
    # rank enumeration: every positive (3, 2) outranks every negative (1, 0)
    scores, labels = [3, 1, 2, 0], [1, 0, 1, 0]
    pairs = [(p, n) for p, lp in zip(scores, labels) if lp for n, ln in zip(scores, labels) if not ln]
    assert sum(p > n for p, n in pairs) / len(pairs) == 1.0
    assert auc(ScoredDataset(scores, labels)) == 1.0
    assert auc(ScoredDataset([5, 5, 5, 5], [1, 0, 1, 0])) == 0.5


def test_metric_errors():
    with pytest.raises(MetricError):
        auc(ScoredDataset([1, 2], [1, 1]))
    with pytest.raises(MetricError):
        roc_curve(ScoredDataset([1, 2]))


label_vectors = st.lists(st.integers(0, 1), min_size=2, max_size=200).filter(lambda y: 0 < sum(y) < len(y))


@settings(max_examples=100)
@given(label_vectors, st.data())
def test_rank_auc_equals_trapezoid(labels, data):
    scores = data.draw(st.lists(st.integers(0, 15), min_size=len(labels), max_size=len(labels)))
    s = ScoredDataset(scores, labels)
    fpr, tpr, _ = roc_curve(s)
    assert abs(auc(s) - trapezoid_auc(fpr, tpr)) <= 1e-9
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
    assert (fpr[0], tpr[0]) == (0.0, 0.0) and (fpr[-1], tpr[-1]) == (1.0, 1.0)
    # pairwise oracle, ties count one half
    pos = [a for a, l in zip(scores, labels) if l]
    neg = [a for a, l in zip(scores, labels) if not l]
    pairwise = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg) / (len(pos) * len(neg))
    assert auc(s) == pytest.approx(pairwise, abs=1e-12)


@settings(max_examples=50)
@given(label_vectors, st.data())
def test_monotone_transform_and_label_swap(labels, data):
    scores = np.array(data.draw(st.lists(st.integers(-50, 50), min_size=len(labels), max_size=len(labels))))
    s = ScoredDataset(scores, labels)
    t = ScoredDataset(3 * scores**3 + scores + 7, labels)  # strictly increasing, exact in float
    a, b = roc_curve(s), roc_curve(t)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert auc(s) == auc(t)
    swapped = ScoredDataset(scores, 1 - np.asarray(labels))
    assert auc(swapped) == pytest.approx(1 - auc(s), abs=1e-12)


def test_random_scores_give_half_auc_and_base_rate_precision():
    rng = np.random.default_rng(0)
    n = 200_000
    y = (rng.random(n) < 0.0209).astype(int)
    s = ScoredDataset(rng.random(n), y)
    assert abs(auc(s) - 0.5) <= 0.05
    recall, precision, _ = pr_curve(s)
    base = y.mean()
    assert abs(base - 0.0209) < 0.002
    settled = recall >= 0.1  # too few flagged records before this to estimate precision
    assert np.all(np.abs(precision[settled] - base) < 0.005)


def test_operating_point_and_category_recall():
    scores = np.array([10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0.5, 0.4])
    labels = np.array([1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0])
    cats = np.array(["dos", "probe", "-", "dos", "-", "-", "-", "-", "-", "-", "r2l", "-"])
    s = ScoredDataset(scores, labels)
    fpr, tpr, thr = operating_point(s, 0.1)
    # 8 negatives, so one false positive is already fpr 0.125 > 0.1
    assert fpr == 0.0 and tpr == 0.5 and thr == 9
    assert recall_by_category(s, cats, 0.1) == {"dos": 0.5, "probe": 1.0, "r2l": 0.0}
    fpr, tpr, thr = operating_point(s, 0.2)
    assert fpr == 0.125 and tpr == 0.75 and thr == 7


def test_agrees_with_sklearn():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(1)
    y = rng.integers(0, 2, 500)
    scores = np.round(rng.normal(y, 1.0), 1)
    s = ScoredDataset(scores, y)
    assert auc(s) == pytest.approx(metrics.roc_auc_score(y, scores), abs=1e-12)
    fpr, tpr, _ = roc_curve(s)
    sk_fpr, sk_tpr, _ = metrics.roc_curve(y, scores, drop_intermediate=False)
    np.testing.assert_allclose(fpr, sk_fpr)
    np.testing.assert_allclose(tpr, sk_tpr)
