"""Reference rates for the two Gaussian families.

Brownian motions with constant drifts have a Gaussian log-likelihood ratio
under either class, ``-m + v Z`` and ``m + v Z`` with
``m = |theta1 - theta0|^2 T / 2`` and ``v = sigma |theta1 - theta0| sqrt(T)``,
so every rate is a normal tail.  OU rates are estimated by Monte Carlo on
exactly sampled paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .lrt import batch_loglik_ratio_exact_ou, ou_transition_variance, threshold_from_level
from .models import ModelError, ModelPair
from .simulate import SimConfig


def norm_cdf(x):
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / math.sqrt(2.0))
    return 0.5 * np.vectorize(math.erfc, otypes=[float])(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def norm_sf(x):
    return norm_cdf(np.negative(x))


@dataclass(frozen=True)
class BmClosedForm:
    m: float
    v: float

    @property
    def ratio(self) -> float:
        return self.m / self.v if self.v > 0 else 0.0


@dataclass(frozen=True)
class RatePair:
    """FNR (``alpha0``) and TNR (``alpha1``) at posterior level ``k``."""

    alpha0: float
    alpha1: float
    k: float
    se0: float | None = None
    se1: float | None = None
    n: int | None = None


def bm_closed_form(pair: ModelPair, t_span: float) -> BmClosedForm:
    if pair.family != "constant-drift":
        raise ModelError("closed-form rates need the constant-drift family")
    if t_span <= 0:
        raise ValueError("t_span must be positive")
    diff = np.asarray(pair.spec1.theta) - np.asarray(pair.spec0.theta)
    dist = float(np.sqrt(diff @ diff))
    return BmClosedForm(0.5 * dist * dist * t_span, pair.spec0.sigma * dist * math.sqrt(t_span))


def bm_rates(pair: ModelPair, t_span: float, k: float) -> RatePair:
    cf = bm_closed_form(pair, t_span)
    if cf.v == 0.0:
        raise ValueError("identical drifts: rates are degenerate in the threshold")
    c = threshold_from_level(k)
    a0 = norm_sf(c / cf.v + cf.m / cf.v)
    a1 = norm_sf(c / cf.v - cf.m / cf.v)
    return RatePair(a0, a1, k)


def bm_optimal_accuracy(pair: ModelPair, t_span: float) -> tuple[float, float]:
    """Maximal balanced accuracy and its posterior level (always 1/2)."""
    return norm_cdf(bm_closed_form(pair, t_span).ratio), 0.5


def bm_auc(pair: ModelPair, t_span: float) -> float:
    """Binormal AUC ``Phi(sqrt(2) m / v)`` of the two score laws."""
    return norm_cdf(math.sqrt(2.0) * bm_closed_form(pair, t_span).ratio)


def bm_rate_curve(pair: ModelPair, t_span: float, levels=None) -> np.ndarray:
    """Rows ``(k, alpha0, alpha1)`` over posterior levels ``k``."""
    if levels is None:
        levels = np.round(np.arange(1, 100) / 100, 2)
    rows = []
    for k in levels:
        r = bm_rates(pair, t_span, k)
        rows.append((k, r.alpha0, r.alpha1))
    return np.array(rows)


def sample_exact_ou(theta: float, sigma: float, config: SimConfig, dim: int, n: int,
                    g: np.random.Generator) -> np.ndarray:
    """``n`` OU paths drawn from the exact Gaussian transition, x0 ~ N(0, I)."""
    dt = config.dt
    a = math.exp(theta * dt)
    sd = math.sqrt(ou_transition_variance(theta, sigma, dt))
    out = np.empty((n, config.n_obs + 1, dim))
    out[:, 0] = g.standard_normal((n, dim))
    for l in range(config.n_obs):
        out[:, l + 1] = a * out[:, l] + sd * g.standard_normal((n, dim))
    return out


def ou_rates_montecarlo(pair: ModelPair, config: SimConfig, k: float = 0.5, n: int = 100_000,
                        seed: int = 0, block: int = 10_000) -> RatePair:
    """Monte-Carlo FNR/TNR of the exact OU likelihood-ratio test.

    ``n`` paths per class are sampled in fixed blocks, each block from its
    own keyed stream, with binomial standard errors.
    """
    if pair.family != "ou":
        raise ModelError("OU Monte Carlo needs the ou family")
    if n < 100:
        raise ValueError("n must be at least 100")
    c = threshold_from_level(k)
    times = np.arange(config.n_obs + 1) * config.dt
    rejected = [0, 0]
    for cls, spec in ((0, pair.spec0), (1, pair.spec1)):
        for b, start in enumerate(range(0, n, block)):
            size = min(block, n - start)
            g = rng.stream(seed, rng.OU_MONTECARLO, cls, b)
            paths = sample_exact_ou(spec.theta[0], spec.sigma, config, pair.dim, size, g)
            rejected[cls] += int(np.sum(batch_loglik_ratio_exact_ou(paths, times, pair) > c))
    a0, a1 = rejected[0] / n, rejected[1] / n
    return RatePair(a0, a1, k, math.sqrt(a0 * (1 - a0) / n), math.sqrt(a1 * (1 - a1) / n), n)
