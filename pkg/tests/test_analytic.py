import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrtbench import analytic
from lrtbench.lrt import ScoreSet, batch_loglik_ratio_exact_ou, threshold_from_level
from lrtbench.metrics import auc, roc_curve, summarize
from lrtbench.models import ModelError, make_model_pair
from lrtbench.simulate import SimConfig

PHI = NormalDist().cdf
BM = make_model_pair("constant-drift", {})


def test_norm_cdf_against_stdlib():
    for x in (-8.0, -2.5, -0.3, 0.0, 0.5, 1.7, 6.0):
        assert analytic.norm_cdf(x) == pytest.approx(PHI(x), rel=1e-12, abs=1e-15)
        assert analytic.norm_sf(x) == pytest.approx(1 - PHI(x), rel=1e-9, abs=1e-15)
    # tabulated far tail, where 1 + erf loses digits
    assert analytic.norm_cdf(-8.0) == pytest.approx(6.220960574271785e-16, rel=1e-12)


def test_closed_form_default():
    cf = analytic.bm_closed_form(BM, 1.0)
    assert (cf.m, cf.v, cf.ratio) == pytest.approx((0.5, 1.0, 0.5))
    cf4 = analytic.bm_closed_form(make_model_pair("constant-drift", {"d": 4}), 1.0)
    assert cf4.ratio == pytest.approx(1.0)  # |theta1 - theta0| = 2


def test_rates_at_half():
    r = analytic.bm_rates(BM, 1.0, 0.5)
    assert r.alpha0 == pytest.approx(1 - PHI(0.5), abs=1e-12)
    assert r.alpha1 == pytest.approx(PHI(0.5), abs=1e-12)
    assert (round(r.alpha0, 4), round(r.alpha1, 4)) == (0.3085, 0.6915)


def test_rates_vanish_as_k_to_one():
    r = analytic.bm_rates(BM, 1.0, 1 - 1e-12)
    assert r.alpha0 < 1e-6 and r.alpha1 < 1e-6
    curve = analytic.bm_rate_curve(BM, 1.0)
    assert np.all(np.diff(curve[:, 1]) <= 0) and np.all(np.diff(curve[:, 2]) <= 0)
    assert curve.shape == (99, 3)


def test_optimal_accuracy_and_auc_values():
    acc, k = analytic.bm_optimal_accuracy(BM, 1.0)
    assert acc == pytest.approx(PHI(0.5)) and k == 0.5
    assert round(acc, 4) == 0.6915
    assert analytic.bm_auc(BM, 1.0) == pytest.approx(PHI(math.sqrt(2) / 2))
    assert round(analytic.bm_auc(BM, 1.0), 4) == 0.7602
    # m/v = 2 at t_span = 16
    assert analytic.bm_auc(BM, 16.0) == pytest.approx(PHI(2 * math.sqrt(2)))
    assert round(analytic.bm_auc(BM, 16.0), 4) == 0.9977


def test_auc_sequence_over_path_length():
    got = [analytic.bm_auc(BM, t) for t in (1, 2, 4, 8)]
    assert got == pytest.approx([0.7602, 0.8413, 0.9214, 0.9772], abs=1e-4)


def test_identical_drifts():
    same = make_model_pair("constant-drift", {"a1": 0.0})
    assert analytic.bm_optimal_accuracy(same, 1.0)[0] == 0.5
    assert analytic.bm_auc(same, 1.0) == 0.5


def test_requires_constant_drift():
    with pytest.raises(ModelError):
        analytic.bm_closed_form(make_model_pair("ou", {}), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.1, 3.0), st.floats(0.1, 4.0))
def test_scale_invariance(c, gap, t_span):
    a = make_model_pair("constant-drift", {"theta1": gap, "sigma": 1.0})
    b = make_model_pair("constant-drift", {"theta1": c * gap, "sigma": c})
    assert analytic.bm_auc(a, t_span) == pytest.approx(analytic.bm_auc(b, t_span), rel=1e-12)
    assert analytic.bm_optimal_accuracy(a, t_span)[0] == pytest.approx(
        analytic.bm_optimal_accuracy(b, t_span)[0], rel=1e-12)


def test_monte_carlo_cross_check():
    """Sample terminal increments exactly and classify with the exact score."""
    g = np.random.default_rng(2024)
    n = 100_000
    inc0 = g.normal(0.0, 1.0, n)
    inc1 = g.normal(1.0, 1.0, n)
    scores = np.concatenate([inc0, inc1]) - 0.5
    s = ScoreSet(scores, np.repeat([0, 1], n), "mc")
    summ = summarize(s)
    assert summ.acc_star == pytest.approx(analytic.bm_optimal_accuracy(BM, 1.0)[0], abs=0.005)
    assert auc(roc_curve(s)) == pytest.approx(analytic.bm_auc(BM, 1.0), abs=0.005)
    r = analytic.bm_rates(BM, 1.0, 0.5)
    assert np.mean(inc0 - 0.5 > 0) == pytest.approx(r.alpha0, abs=0.005)


def test_ou_exact_sampler_variance():
    cfg = SimConfig(0.1, 20, 2.0, 2, 0.01, 0)
    x = analytic.sample_exact_ou(-1.0, 1.0, cfg, 1, 50_000, np.random.default_rng(3))
    assert x.shape == (50_000, 21, 1)
    stationary_start = np.var(x[:, 0, 0])
    # x0 ~ N(0, 1); Var X_t = e^{-2t} + (1 - e^{-2t}) / 2
    want = math.exp(-4) + (1 - math.exp(-4)) / 2
    assert np.var(x[:, -1, 0]) == pytest.approx(want, rel=0.03)
    assert stationary_start == pytest.approx(1.0, rel=0.03)


def test_ou_montecarlo_reproducible_and_seed_stable():
    pair = make_model_pair("ou", {})
    cfg = SimConfig(0.1, 20, 2.0, 2000, 0.01, 0)
    a = analytic.ou_rates_montecarlo(pair, cfg, 0.5, 100_000, seed=1)
    b = analytic.ou_rates_montecarlo(pair, cfg, 0.5, 100_000, seed=1)
    c = analytic.ou_rates_montecarlo(pair, cfg, 0.5, 100_000, seed=2)
    assert a == b
    for x, y, sx, sy in ((a.alpha0, c.alpha0, a.se0, c.se0), (a.alpha1, c.alpha1, a.se1, c.se1)):
        assert abs(x - y) <= 3 * math.hypot(sx, sy)
    assert a.se0 == pytest.approx(math.sqrt(a.alpha0 * (1 - a.alpha0) / 100_000))


def test_ou_montecarlo_identical_laws():
    pair = make_model_pair("ou", {"theta1": -1.0})
    cfg = SimConfig(0.1, 20, 2.0, 2000, 0.01, 0)
    r = analytic.ou_rates_montecarlo(pair, cfg, 0.5, 5_000, seed=4)
    assert abs(r.alpha0 - r.alpha1) <= 3 * math.hypot(r.se0, r.se1)


def test_ou_montecarlo_matches_direct_scoring():
    """Same sampler, scored through the public exact-ou path."""
    pair = make_model_pair("ou", {})
    cfg = SimConfig(0.1, 20, 2.0, 2000, 0.01, 0)
    g0, g1 = np.random.default_rng(7), np.random.default_rng(8)
    n = 40_000
    times = np.arange(21) * 0.1
    s0 = batch_loglik_ratio_exact_ou(analytic.sample_exact_ou(-1.0, 1.0, cfg, 1, n, g0), times, pair)
    s1 = batch_loglik_ratio_exact_ou(analytic.sample_exact_ou(-0.5, 1.0, cfg, 1, n, g1), times, pair)
    c = threshold_from_level(0.5)
    r = analytic.ou_rates_montecarlo(pair, cfg, 0.5, 100_000, seed=0)
    se = math.sqrt(0.25 / n)
    assert abs(np.mean(s0 > c) - r.alpha0) <= 3 * math.hypot(se, r.se0)
    assert abs(np.mean(s1 > c) - r.alpha1) <= 3 * math.hypot(se, r.se1)


def test_ou_montecarlo_validation():
    cfg = SimConfig(0.1, 20, 2.0, 2000, 0.01, 0)
    with pytest.raises(ValueError):
        analytic.ou_rates_montecarlo(make_model_pair("ou", {}), cfg, 0.5, 10)
    with pytest.raises(Exception):
        analytic.ou_rates_montecarlo(BM, cfg, 0.5, 1000)
