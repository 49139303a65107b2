"""Log-likelihood-ratio scores ``log p(x | theta1) / p(x | theta0)``.

Scores are positive when a path looks more like class 1.  Four modes:

``numerical``
    Euler-Maruyama transition densities on the observed grid.
``hidden-truth``
    The same formula on the retained fine simulation grid.
``exact-bm`` / ``exact-ou``
    Closed-form Gaussian transition densities on the observed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import ModelPair, drift, noise_diag
from .simulate import Dataset, TimeSeriesPath

MODES = ("hidden-truth", "numerical", "exact-bm", "exact-ou")

# lower bound on diagonal covariance entries before inversion
SIGMA_FLOOR = 1e-8
# below this |theta * dt| the OU variance uses its theta -> 0 limit
OU_LIMIT = 1e-8


class LrtError(ValueError):
    pass


@dataclass
class ScoreSet:
    """Per-path classifier scores with their labels.

    ``path_index`` maps each row to its position in the source dataset;
    ``provenance`` is that dataset's content digest.
    """

    scores: np.ndarray
    labels: np.ndarray
    mode: str
    provenance: str = ""
    path_index: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.scores.shape != self.labels.shape or self.scores.ndim != 1:
            raise LrtError("scores and labels must be 1-d and of equal length")
        if self.path_index is None:
            self.path_index = np.arange(len(self.scores))
        else:
            self.path_index = np.asarray(self.path_index, dtype=np.int64)

    def __len__(self):
        return len(self.scores)

    def subset(self, rows) -> "ScoreSet":
        rows = np.asarray(rows)
        return ScoreSet(self.scores[rows], self.labels[rows], self.mode, self.provenance,
                        self.path_index[rows], dict(self.meta))


def _as_batch(states) -> np.ndarray:
    x = np.asarray(states, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise LrtError("states must be (L+1, d) or (M, L+1, d)")
    return x


def _euler_lrt(states: np.ndarray, times: np.ndarray, pair: ModelPair) -> np.ndarray:
    x = states[:, :-1]
    dx = np.diff(states, axis=1)
    t = times[:-1]
    dt = np.diff(times)
    b0 = drift(pair.spec0, t, x)
    b1 = drift(pair.spec1, t, x)
    s = noise_diag(pair.spec0, x)
    inv = 1.0 / np.maximum(s * s, SIGMA_FLOOR)
    cross = np.sum((b1 - b0) * inv * dx, axis=-1)
    q1 = np.sum(b1 * b1 * inv, axis=-1)
    q0 = np.sum(b0 * b0 * inv, axis=-1)
    return np.sum(cross - 0.5 * (q1 - q0) * dt, axis=-1)


def batch_loglik_ratio_numerical(states, times, pair: ModelPair, chunk_bytes: float = 2e8) -> np.ndarray:
    """Euler-Maruyama log-likelihood ratio for every path in ``states``."""
    x = _as_batch(states)
    times = np.asarray(times, dtype=float)
    if x.shape[2] != pair.dim:
        raise LrtError(f"path dimension {x.shape[2]} does not match pair dimension {pair.dim}")
    if x.shape[1] < 2 or len(times) != x.shape[1]:
        raise LrtError("need at least two observations on a matching time grid")
    per_path = x.shape[1] * x.shape[2] * 8 * 8
    if pair.family == "interacting-particles":
        per_path *= pair.spec0.n_agents
    step = max(1, int(chunk_bytes // per_path))
    out = np.concatenate([_euler_lrt(x[i:i + step], times, pair) for i in range(0, len(x), step)])
    if not np.all(np.isfinite(out)):
        raise LrtError("non-finite log-likelihood ratio")
    return out


def loglik_ratio_numerical(path: TimeSeriesPath, pair: ModelPair) -> float:
    """Euler-Maruyama approximate log-likelihood ratio of one path."""
    return float(batch_loglik_ratio_numerical(path.states, path.times, pair)[0])


def _check_family(pair: ModelPair, family: str):
    if pair.family != family:
        raise LrtError(f"pair family {pair.family!r} is not {family!r}")


def batch_loglik_ratio_exact_bm(states, times, pair: ModelPair) -> np.ndarray:
    _check_family(pair, "constant-drift")
    x = _as_batch(states)
    times = np.asarray(times, dtype=float)
    th0 = np.asarray(pair.spec0.theta)
    th1 = np.asarray(pair.spec1.theta)
    sig2 = pair.spec0.sigma ** 2
    incr = x[:, -1] - x[:, 0]
    span = times[-1] - times[0]
    return (incr @ th1 - incr @ th0 - 0.5 * (th1 @ th1 - th0 @ th0) * span) / sig2


def loglik_ratio_exact_bm(path: TimeSeriesPath, pair: ModelPair) -> float:
    """Exact log-likelihood ratio of two Brownian motions with constant drifts."""
    return float(batch_loglik_ratio_exact_bm(path.states, path.times, pair)[0])


def ou_transition_variance(theta: float, sigma: float, dt: float) -> float:
    """Per-coordinate variance of ``X_{t+dt} | X_t`` for ``dX = theta X dt + sigma dB``."""
    a = 2.0 * theta * dt
    if abs(theta * dt) < OU_LIMIT:
        return sigma * sigma * dt
    return sigma * sigma * math.expm1(a) / (2.0 * theta)


def batch_loglik_ratio_exact_ou(states, times, pair: ModelPair) -> np.ndarray:
    _check_family(pair, "ou")
    x = _as_batch(states)
    times = np.asarray(times, dtype=float)
    gaps = np.diff(times)
    dt = gaps[0]
    if not np.allclose(gaps, dt, rtol=1e-9, atol=0.0):
        raise LrtError("exact OU likelihood needs a uniform time grid")
    sigma = pair.spec0.sigma
    th0, th1 = pair.spec0.theta[0], pair.spec1.theta[0]
    v0 = ou_transition_variance(th0, sigma, dt)
    v1 = ou_transition_variance(th1, sigma, dt)
    prev, nxt = x[:, :-1], x[:, 1:]
    r0 = np.sum((nxt - math.exp(th0 * dt) * prev) ** 2, axis=(1, 2))
    r1 = np.sum((nxt - math.exp(th1 * dt) * prev) ** 2, axis=(1, 2))
    n_terms = x.shape[2] * gaps.size
    return 0.5 * n_terms * (math.log(v0) - math.log(v1)) + 0.5 * (r0 / v0 - r1 / v1)


def loglik_ratio_exact_ou(path: TimeSeriesPath, pair: ModelPair) -> float:
    """Exact log-likelihood ratio of two OU processes on a uniform grid."""
    return float(batch_loglik_ratio_exact_ou(path.states, path.times, pair)[0])


def lrt_scores(dataset: Dataset, pair: ModelPair | None = None, mode: str = "numerical") -> ScoreSet:
    """Score every path of ``dataset`` with the LRT in ``mode``; no training."""
    pair = pair or dataset.pair
    if pair is None:
        raise LrtError("no model pair given and the dataset carries none")
    if mode == "hidden-truth":
        if dataset.fine is None:
            raise LrtError("hidden-truth scores need retained fine paths")
        scores = batch_loglik_ratio_numerical(dataset.fine, dataset.fine_times, pair)
    elif mode == "numerical":
        scores = batch_loglik_ratio_numerical(dataset.observed, dataset.times, pair)
    elif mode == "exact-bm":
        scores = batch_loglik_ratio_exact_bm(dataset.observed, dataset.times, pair)
    elif mode == "exact-ou":
        scores = batch_loglik_ratio_exact_ou(dataset.observed, dataset.times, pair)
    else:
        raise LrtError(f"unknown mode {mode!r}; expected one of {MODES}")
    return ScoreSet(scores, dataset.labels.copy(), mode, dataset.digest)


def threshold_from_level(k: float) -> float:
    """Score threshold ``c_k = log(k / (1 - k))`` for posterior level ``k``."""
    if not 0.0 < k < 1.0:
        raise LrtError("k must lie in (0, 1)")
    return math.log(k / (1.0 - k))


def lrt_posterior(score):
    """Logistic map ``1 / (1 + exp(-score))``; exceeds k iff score exceeds c_k."""
    scalar = np.ndim(score) == 0
    s = np.atleast_1d(np.asarray(score, dtype=float))
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return float(out[0]) if scalar else out
