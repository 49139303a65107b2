import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrtbench.lrt import ScoreSet
from lrtbench.metrics import (
    MetricsError, auc, bootstrap_rates, confusion, mann_whitney_auc, max_accuracy, roc_curve, sampling_error,
    summarize, summarize_runs,
)


def S(scores, labels):
    return ScoreSet(np.asarray(scores, float), np.asarray(labels), "test")


def brute_acc(scores, labels):
    """Best balanced accuracy over every cut, including the empty rejection region."""
    scores, labels = np.asarray(scores, float), np.asarray(labels)
    best = -1.0
    for t in np.concatenate([[-np.inf], np.unique(scores)]):
        a0 = np.mean(scores[labels == 0] > t)
        a1 = np.mean(scores[labels == 1] > t)
        best = max(best, 0.5 * (1 - a0 + a1))
    return best


def test_confusion_examples():
    c = confusion(S([-1, 1], [0, 1]), 0.0)
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 0, 0, 1)
    c = confusion(S([0.3, 0.3, 0.3], [0, 1, 1]), 0.3)
    assert c.fn == 0 and c.tn == 0
    c = confusion(S([-2, -1, 1, 2], [0, 0, 1, 1]), 0.0)
    assert c.tp == 2 and c.tn == 2
    assert c.fnr == 0.0 and c.tnr == 1.0 and c.accuracy == 1.0


def test_roc_examples():
    sep = S([-3, -2, 5, 6], [0, 0, 1, 1])
    r = roc_curve(sep)
    assert any(f == 0 and t == 1 for f, t in zip(r.fpr, r.tpr))
    assert auc(r) == 1.0
    flat = roc_curve(S([1, 1, 1, 1], [0, 1, 0, 1]))
    assert len(flat) == 2
    assert list(flat.fpr) == [0, 1] and list(flat.tpr) == [0, 1]
    assert auc(flat) == 0.5
    assert auc(roc_curve(S([1, 2, 3, 4], [0, 1, 0, 1]))) == 0.75
    assert mann_whitney_auc(S([1, 2, 3, 4], [0, 1, 0, 1])) == 0.75


def test_roc_endpoints_and_monotone():
    g = np.random.default_rng(0)
    r = roc_curve(S(g.normal(size=50), np.repeat([0, 1], 25)))
    assert (r.fpr[0], r.tpr[0], r.fpr[-1], r.tpr[-1]) == (0, 0, 1, 1)
    assert np.all(np.diff(r.fpr) >= 0) and np.all(np.diff(r.tpr) >= 0)
    assert r.thresholds[0] == -np.inf


def test_max_accuracy_examples():
    acc, k = max_accuracy(S([1, 2, 3, 4], [0, 1, 0, 1]))
    assert acc == 0.75
    # the optimum is attained at thresholds 1 and 3; the smaller one is reported
    assert k == 1.0
    c = confusion(S([1, 2, 3, 4], [0, 1, 0, 1]), k)
    assert 0.5 * (c.tp / 2 + c.tn / 2) == 0.75
    assert max_accuracy(S([-2, -1, 1, 2], [0, 0, 1, 1]))[0] == 1.0
    acc, k = max_accuracy(S([5, 5, 5, 5], [0, 1, 0, 1]))
    assert acc == 0.5 and k == -np.inf


def test_summary_rates_consistent_with_confusion():
    g = np.random.default_rng(5)
    s = S(np.round(g.normal(size=300), 1), np.repeat([0, 1], 150))
    m = summarize(s)
    c = confusion(s, m.k_star)
    assert m.alpha0 == c.fnr and m.alpha1 == c.tnr
    assert m.acc_star == pytest.approx(0.5 * (1 - m.alpha0 + m.alpha1), abs=1e-15)


scores_and_labels = st.integers(2, 40).flatmap(lambda n: st.tuples(
    st.lists(st.integers(-5, 5), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda l: 0 < sum(l) < len(l)),
))


@settings(max_examples=200, deadline=None)
@given(scores_and_labels)
def test_auc_equals_mann_whitney(data):
    scores, labels = data
    s = S(np.array(scores) / 2.0, labels)
    assert auc(roc_curve(s)) == mann_whitney_auc(s)
    assert summarize(s).auc == mann_whitney_auc(s)


@settings(max_examples=200, deadline=None)
@given(scores_and_labels)
def test_acc_star_equals_brute_force(data):
    scores, labels = data
    s = S(scores, labels)
    assert summarize(s).acc_star == pytest.approx(brute_acc(scores, labels), abs=1e-12)
    assert summarize(s).acc_star >= 0.5


@settings(max_examples=100, deadline=None)
@given(scores_and_labels, st.floats(0.1, 10.0), st.floats(-5, 5))
def test_auc_invariant_under_increasing_maps(data, a, b):
    scores, labels = data
    s = S(scores, labels)
    t = S(a * np.asarray(scores, float) + b, labels)
    assert auc(roc_curve(s)) == auc(roc_curve(t))


@settings(max_examples=100, deadline=None)
@given(scores_and_labels)
def test_flipping_scores_complements_auc(data):
    scores, labels = data
    a = auc(roc_curve(S(scores, labels)))
    b = auc(roc_curve(S(-np.asarray(scores, float), labels)))
    assert a + b == pytest.approx(1.0, abs=1e-12)


def test_auc_without_counts_uses_float_trapezoid():
    r = roc_curve(S([1, 2, 3, 4], [0, 1, 0, 1]))
    r2 = type(r)(r.fpr, r.tpr, r.thresholds)
    assert auc(r2) == pytest.approx(0.75)


def test_errors():
    with pytest.raises(MetricsError):
        roc_curve(S([1.0, 2.0], [0, 0]))
    with pytest.raises(MetricsError):
        summarize(S([], []))
    with pytest.raises(MetricsError):
        sampling_error(1.5, 10)


def test_sampling_error_values():
    e = sampling_error(0.5, 500)
    assert e.clt_std == pytest.approx(math.sqrt(0.25 / 500))
    assert round(e.clt_std, 5) == 0.02236
    assert e.rule_of_thumb == pytest.approx(0.5 / math.sqrt(500))
    assert sampling_error(0.0, 500).clt_std == 0.0
    assert sampling_error(1.0, 500).clt_std == 0.0
    assert sampling_error(0.3, 500, 0.1).hoeffding == pytest.approx(2 * math.exp(-2.5))
    assert round(sampling_error(0.3, 500, 0.1).hoeffding, 4) == 0.1642


def test_bootstrap_rates_shape_and_determinism():
    g = np.random.default_rng(1)
    s = S(g.normal(size=400), np.repeat([0, 1], 200))
    a = bootstrap_rates(s, 0.0, 100, 50, seed=3)
    b = bootstrap_rates(s, 0.0, 100, 50, seed=3)
    assert a.shape == (50, 2) and np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))
    assert np.mean(a[:, 0]) == pytest.approx(np.mean(s.scores[:200] > 0), abs=0.03)


def test_summarize_runs_examples():
    f = summarize_runs([1, 2, 3, 4, 5])
    assert (f.minimum, f.median, f.maximum) == (1, 3, 5)
    assert (f.q1, f.q3) == (2, 4)
    c = summarize_runs([0.7] * 6)
    assert len(set(c.as_row()[:5])) == 1 and c.outliers == ()
    o = summarize_runs(list(range(1, 9)) + [100])
    assert o.outliers == (100.0,)
    assert o.whisker_high == 8.0
    # linear interpolation quartiles, checked against a hand computation
    q = summarize_runs([1, 2, 4, 8])
    assert (q.q1, q.median, q.q3) == (1.75, 3.0, 5.0)
    with pytest.raises(MetricsError):
        summarize_runs([])
