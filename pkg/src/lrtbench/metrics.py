"""Confusion matrices, ROC/AUC, maximal balanced accuracy and run summaries.

Conventions: class 0 is the positive class.  A path is rejected (assigned
to class 1) iff its score is strictly greater than the threshold, so
``alpha0`` (FNR) is the rejected fraction of class 0 and ``alpha1`` (TNR)
the rejected fraction of class 1.  TPR = 1 - alpha0, FPR = 1 - alpha1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .lrt import ScoreSet


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def fnr(self) -> float:
        return self.fn / (self.tp + self.fn)

    @property
    def tnr(self) -> float:
        return self.tn / (self.fp + self.tn)

    @property
    def accuracy(self) -> float:
        """Balanced accuracy ``(1 - FNR + TNR) / 2``."""
        return 0.5 * (1.0 - self.fnr + self.tnr)


@dataclass(frozen=True)
class RocCurve:
    """ROC points ordered by threshold (and hence by FPR).

    ``neg_counts``/``pos_counts`` hold the cumulative class-1 / class-0
    counts at or below each threshold so the area can be computed exactly.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    pos_counts: np.ndarray | None = None
    neg_counts: np.ndarray | None = None

    def __len__(self):
        return len(self.fpr)


@dataclass(frozen=True)
class MetricsSummary:
    auc: float
    acc_star: float
    k_star: float
    alpha0: float
    alpha1: float


@dataclass(frozen=True)
class SamplingErrorEstimate:
    rate: float
    m: int
    clt_std: float
    hoeffding: float
    epsilon: float
    rule_of_thumb: float


@dataclass(frozen=True)
class FiveNumberSummary:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]

    def as_row(self) -> list[float]:
        return [self.minimum, self.q1, self.median, self.q3, self.maximum]


def _split(scores: ScoreSet):
    if len(scores) == 0:
        raise MetricsError("empty score set")
    s0 = scores.scores[scores.labels == 0]
    s1 = scores.scores[scores.labels == 1]
    return s0, s1


def confusion(scores: ScoreSet, threshold: float) -> ConfusionMatrix:
    s0, s1 = _split(scores)
    fn = int(np.sum(s0 > threshold))
    tn = int(np.sum(s1 > threshold))
    return ConfusionMatrix(tp=len(s0) - fn, fn=fn, fp=len(s1) - tn, tn=tn)


def _sweep(scores: ScoreSet):
    s0, s1 = _split(scores)
    if len(s0) == 0 or len(s1) == 0:
        raise MetricsError("both classes must be present")
    values, inverse = np.unique(scores.scores, return_inverse=True)
    c0 = np.bincount(inverse[scores.labels == 0], minlength=len(values))
    c1 = np.bincount(inverse[scores.labels == 1], minlength=len(values))
    # prepend the -inf threshold where nothing is accepted
    cum0 = np.concatenate([[0], np.cumsum(c0)])
    cum1 = np.concatenate([[0], np.cumsum(c1)])
    thresholds = np.concatenate([[-np.inf], values])
    return thresholds, cum0, cum1, len(s0), len(s1)


def roc_curve(scores: ScoreSet) -> RocCurve:
    """ROC over every distinct score value, from (0, 0) to (1, 1)."""
    thr, cum0, cum1, n0, n1 = _sweep(scores)
    return RocCurve(cum1 / n1, cum0 / n0, thr, cum0, cum1)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under ``curve``.

    With count data attached the sum is done in integers, which makes the
    result identical to the Mann-Whitney statistic.
    """
    if curve.pos_counts is not None and curve.neg_counts is not None:
        p = curve.pos_counts.astype(np.int64)
        q = curve.neg_counts.astype(np.int64)
        num = int(np.sum(np.diff(q) * (p[1:] + p[:-1])))
        return num / (2 * int(p[-1]) * int(q[-1]))
    return float(np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1])) / 2.0)


def mann_whitney_auc(scores: ScoreSet) -> float:
    """Brute-force ``P(S1 > S0) + P(S1 = S0) / 2`` over all pairs."""
    s0, s1 = _split(scores)
    gt = int(np.sum(s1[:, None] > s0[None, :]))
    eq = int(np.sum(s1[:, None] == s0[None, :]))
    return (2 * gt + eq) / (2 * len(s0) * len(s1))


def max_accuracy(scores: ScoreSet) -> tuple[float, float]:
    """``(acc_star, k_star)``: best balanced accuracy and its score threshold.

    Ties go to the smallest threshold.
    """
    summary = summarize(scores)
    return summary.acc_star, summary.k_star


def summarize(scores: ScoreSet) -> MetricsSummary:
    thr, cum0, cum1, n0, n1 = _sweep(scores)
    # 2 n0 n1 ACC - n0 n1 = cum0 n1 - cum1 n0, compared exactly in integers
    gain = cum0.astype(np.int64) * n1 - cum1.astype(np.int64) * n0
    best = int(np.argmax(gain))
    acc = 0.5 * (1.0 + int(gain[best]) / (n0 * n1))
    area = auc(RocCurve(cum1 / n1, cum0 / n0, thr, cum0, cum1))
    a0 = int(n0 - cum0[best]) / n0
    a1 = int(n1 - cum1[best]) / n1
    return MetricsSummary(area, acc, float(thr[best]), a0, a1)


def sampling_error(rate: float, m: int, epsilon: float = 0.05) -> SamplingErrorEstimate:
    """CLT standard deviation and Hoeffding tail of an empirical rate."""
    if m < 1:
        raise MetricsError("m must be >= 1")
    if not 0.0 <= rate <= 1.0:
        raise MetricsError("rate must lie in [0, 1]")
    return SamplingErrorEstimate(
        rate=rate,
        m=m,
        clt_std=math.sqrt(rate * (1.0 - rate) / m),
        hoeffding=2.0 * math.exp(-m * epsilon * epsilon / 2.0),
        epsilon=epsilon,
        rule_of_thumb=0.5 / math.sqrt(m),
    )


def bootstrap_rates(scores: ScoreSet, threshold: float, m: int, n_boot: int, seed: int = 0) -> np.ndarray:
    """Empirical (FNR, TNR) over ``n_boot`` resamples of ``m`` paths per class.

    Returns an (n_boot, 2) array.
    """
    s0, s1 = _split(scores)
    r0 = (s0 > threshold).astype(np.int64)
    r1 = (s1 > threshold).astype(np.int64)
    out = np.empty((n_boot, 2))
    for b in range(n_boot):
        g = rng.stream(seed, rng.BOOTSTRAP, b)
        out[b, 0] = r0[g.integers(0, len(r0), m)].mean()
        out[b, 1] = r1[g.integers(0, len(r1), m)].mean()
    return out


def summarize_runs(values) -> FiveNumberSummary:
    """Box-plot statistics with linear-interpolation quartiles and 1.5 IQR fences."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise MetricsError("no values to summarise")
    q1, med, q3 = np.percentile(v, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo) & (v <= hi)]
    outliers = tuple(float(x) for x in np.sort(v[(v < lo) | (v > hi)]))
    return FiveNumberSummary(
        float(v.min()), float(q1), float(med), float(q3), float(v.max()),
        float(inside.min()), float(inside.max()), outliers,
    )
