"""Random convolutional kernel features with a ridge-regression classifier.

Each kernel is a dilated 1-d convolution applied to one input channel; the
feature map is summarised by its proportion of positive values (ppv) and
its maximum.  A closed-form ridge fit on standardised features, with the
penalty chosen by stratified 5-fold validation accuracy, turns the
``2 * n_kernels`` features into a linear decision score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from . import rng
from .lrt import ScoreSet
from .simulate import Dataset

KERNEL_LENGTHS = (7, 9, 11)
DEFAULT_LAMBDAS = tuple(10.0 ** np.arange(-3, 4))
ARTIFACT_VERSION = 1


class RocketError(ValueError):
    pass


@dataclass(frozen=True)
class RocketKernel:
    weights: np.ndarray
    bias: float
    dilation: int
    padding: bool
    channel: int = 0

    @property
    def length(self) -> int:
        return len(self.weights)

    @property
    def span(self) -> int:
        return (self.length - 1) * self.dilation + 1

    @property
    def pad_amount(self) -> int:
        return ((self.length - 1) * self.dilation) // 2 if self.padding else 0


@dataclass
class FeatureMatrix:
    values: np.ndarray
    n_kernels: int

    @property
    def ppv(self) -> np.ndarray:
        return self.values[:, 0::2]

    @property
    def max(self) -> np.ndarray:
        return self.values[:, 1::2]


@dataclass
class LinearClassifier:
    """Ridge weights on standardised features; dropped columns carry weight 0."""

    coef: np.ndarray
    intercept: float
    lam: float
    mean: np.ndarray
    scale: np.ndarray
    keep: np.ndarray
    cv_accuracy: dict | None = None


def sample_kernels(count: int, l_input: int, seed: int, n_channels: int = 1) -> list[RocketKernel]:
    """Draw ``count`` kernels for series of length ``l_input``.

    Dilation is ``floor(2**x)`` with ``x ~ N(0, A)``,
    ``A = log2((l_input - 1) / (length - 1))``, clipped to ``[1, max]`` where
    ``max`` keeps the dilated span inside the series.  Kernels longer than a
    short series are forced to pad.
    """
    if count < 1:
        raise RocketError("count must be positive")
    if l_input < 2:
        raise RocketError("series must have at least two points")
    g = rng.stream(seed, rng.KERNELS)
    kernels = []
    for _ in range(count):
        length = int(g.choice(KERNEL_LENGTHS))
        w = g.standard_normal(length)
        w = w - w.mean()
        bias = float(g.uniform(-1.0, 1.0))
        a = max(math.log2((l_input - 1) / (length - 1)), 0.0)
        x = math.sqrt(a) * float(g.standard_normal())
        padding = bool(g.integers(2))
        channel = int(g.integers(n_channels))
        max_dilation = (l_input - 1) // (length - 1)
        if max_dilation < 1:
            padding, dilation = True, 1
        else:
            dilation = min(max(int(2.0 ** x), 1), max_dilation)
        kernels.append(RocketKernel(w, bias, dilation, padding, channel))
    return kernels


@njit(cache=True)
def _apply(x, w, bias, dilation, pad):
    n = x.shape[0]
    length = w.shape[0]
    end = n + pad - (length - 1) * dilation
    out_len = end + pad
    n_pos = 0
    best = -np.inf
    for i in range(-pad, end):
        s = bias
        idx = i
        for j in range(length):
            if 0 <= idx < n:
                s += w[j] * x[idx]
            idx += dilation
        if s > best:
            best = s
        if s > 0:
            n_pos += 1
    return n_pos / out_len, best


@njit(parallel=True, cache=True)
def _transform(X, weights, offsets, lengths, biases, dilations, pads, channels):
    n_series = X.shape[0]
    n_kernels = lengths.shape[0]
    out = np.empty((n_series, 2 * n_kernels))
    for i in prange(n_series):
        for k in range(n_kernels):
            w = weights[offsets[k]:offsets[k] + lengths[k]]
            ppv, mx = _apply(X[i, channels[k]], w, biases[k], dilations[k], pads[k])
            out[i, 2 * k] = ppv
            out[i, 2 * k + 1] = mx
    return out


def _pack(kernels):
    lengths = np.array([k.length for k in kernels], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64)
    weights = np.concatenate([np.asarray(k.weights, dtype=float) for k in kernels])
    biases = np.array([k.bias for k in kernels], dtype=float)
    dilations = np.array([k.dilation for k in kernels], dtype=np.int64)
    pads = np.array([k.pad_amount for k in kernels], dtype=np.int64)
    channels = np.array([k.channel for k in kernels], dtype=np.int64)
    return weights, offsets, lengths, biases, dilations, pads, channels


def apply_kernel(kernel: RocketKernel, series) -> tuple[float, float]:
    """(ppv, max) of the kernel's feature map on a single channel."""
    x = np.ascontiguousarray(series, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise RocketError("series must be a nonempty 1-d sequence")
    if kernel.span > x.size + 2 * kernel.pad_amount:
        raise RocketError(f"kernel span {kernel.span} does not fit a series of length {x.size}")
    ppv, mx = _apply(x, np.asarray(kernel.weights, dtype=float), float(kernel.bias),
                     kernel.dilation, kernel.pad_amount)
    return float(ppv), float(mx)


def series_channels(dataset: Dataset, include_time: bool = True) -> np.ndarray:
    """(M, channels, L+1) input array: state coordinates, then the time grid."""
    x = np.transpose(dataset.observed, (0, 2, 1))
    if include_time:
        grid = np.broadcast_to(dataset.times, (x.shape[0], 1, x.shape[2]))
        x = np.concatenate([x, grid], axis=1)
    return np.ascontiguousarray(x)


def featurize(dataset: Dataset, kernels: list[RocketKernel], include_time: bool = True) -> FeatureMatrix:
    """Per-path ``(ppv, max)`` for every kernel, kernel-major column order."""
    X = series_channels(dataset, include_time)
    n_ch, l_input = X.shape[1], X.shape[2]
    for k in kernels:
        if k.channel >= n_ch:
            raise RocketError(f"kernel channel {k.channel} but input has {n_ch} channels")
        if k.span > l_input + 2 * k.pad_amount:
            raise RocketError("kernel span exceeds the series length; resample kernels for this length")
    return FeatureMatrix(_transform(X, *_pack(kernels)), len(kernels))


def ridge_solutions(Z: np.ndarray, y: np.ndarray, lambdas) -> np.ndarray:
    """Ridge coefficients of centred ``y`` on centred ``Z`` for every penalty.

    Uses the dual (n x n) eigenproblem when features outnumber samples.
    Returns a (len(lambdas), p) array.
    """
    n, p = Z.shape
    yc = y - y.mean()
    lambdas = np.asarray(lambdas, dtype=float)
    if p > n:
        evals, U = np.linalg.eigh(Z @ Z.T)
        evals = np.clip(evals, 0.0, None)
        uy = U.T @ yc
        alpha = (uy[None, :] / (evals[None, :] + lambdas[:, None])) @ U.T
        return alpha @ Z
    evals, V = np.linalg.eigh(Z.T @ Z)
    evals = np.clip(evals, 0.0, None)
    vz = V.T @ (Z.T @ yc)
    return (vz[None, :] / (evals[None, :] + lambdas[:, None])) @ V.T


def _standardize(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    keep = std > 1e-12 * np.maximum(1.0, np.abs(mean))
    scale = np.where(keep, std, 1.0)
    return mean, scale, keep


def _folds(labels, n_folds, seed):
    fold = np.empty(len(labels), dtype=np.int64)
    g = rng.stream(seed, rng.FOLDS)
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        fold[g.permutation(idx)] = np.arange(len(idx)) % n_folds
    return fold


def fit_ridge(features, labels, lambdas=DEFAULT_LAMBDAS, n_folds: int = 5, seed: int = 0) -> LinearClassifier:
    """Standardise, pick the penalty by stratified k-fold accuracy, refit.

    Labels are encoded -1 (class 0) / +1 (class 1).  The number of folds
    drops to the smaller class count when that is below ``n_folds``.  Equal
    validation accuracies resolve to the largest penalty.
    """
    X = np.asarray(features.values if isinstance(features, FeatureMatrix) else features, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != labels.size:
        raise RocketError("features must be (n, p) with one label per row")
    counts = np.bincount(labels, minlength=2)
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    if counts.size != 2 or counts.min() < 1:
        raise RocketError("both classes must be present in the training set")
    if len(lambdas) > 1 and counts.min() < 2:
        raise RocketError("penalty selection needs at least two training samples per class")
    y = np.where(labels == 1, 1.0, -1.0)

    acc = np.zeros(len(lambdas))
    if len(lambdas) > 1:
        k = int(min(n_folds, counts.min()))
        fold = _folds(labels, k, seed)
        for f in range(k):
            tr, va = fold != f, fold == f
            mean, scale, keep = _standardize(X[tr])
            Ztr = ((X[tr] - mean) / scale)[:, keep]
            Zva = ((X[va] - mean) / scale)[:, keep]
            W = ridge_solutions(Ztr, y[tr], lambdas)
            pred = Zva @ W.T + y[tr].mean()
            acc += np.sum((pred > 0) == (y[va] > 0)[:, None], axis=0)
        acc /= len(y)
    best = len(lambdas) - 1 - int(np.argmax(acc[::-1]))
    lam = float(lambdas[best])

    mean, scale, keep = _standardize(X)
    if not keep.any():
        raise RocketError("degenerate training set: every feature is constant")
    Z = ((X - mean) / scale)[:, keep]
    coef = np.zeros(X.shape[1])
    coef[keep] = ridge_solutions(Z, y, [lam])[0]
    return LinearClassifier(coef, float(y.mean()), lam, mean, scale, keep,
                            dict(zip(map(float, lambdas), map(float, acc))))


def predict_scores(clf: LinearClassifier, features, labels=None, mode: str = "rocket",
                   provenance: str = "", path_index=None) -> ScoreSet | np.ndarray:
    """Raw linear decision values; a ScoreSet when labels are supplied."""
    X = np.asarray(features.values if isinstance(features, FeatureMatrix) else features, dtype=float)
    if X.ndim != 2 or X.shape[1] != clf.coef.size:
        raise RocketError(f"expected {clf.coef.size} features, got {X.shape[-1]}")
    k = clf.keep
    s = ((X[:, k] - clf.mean[k]) / clf.scale[k]) @ clf.coef[k] + clf.intercept
    if labels is None:
        return s
    return ScoreSet(s, labels, mode, provenance, path_index)


@dataclass
class RocketModel:
    """Kernels, fitted classifier and the input layout they assume."""

    kernels: list[RocketKernel]
    classifier: LinearClassifier | None
    l_input: int
    n_channels: int
    include_time: bool = True

    @classmethod
    def fit(cls, train: Dataset, n_kernels: int = 10_000, seed: int = 0, include_time: bool = True,
            lambdas=DEFAULT_LAMBDAS) -> "RocketModel":
        n_channels = train.dim + int(include_time)
        kernels = sample_kernels(n_kernels, len(train.times), seed, n_channels)
        feats = featurize(train, kernels, include_time)
        clf = fit_ridge(feats, train.labels, lambdas, seed=seed)
        return cls(kernels, clf, len(train.times), n_channels, include_time)

    def scores(self, data: Dataset, path_index=None, provenance: str | None = None) -> ScoreSet:
        """Decision scores for ``data``; pass the source digest when ``data`` is a subset."""
        if len(data.times) != self.l_input or data.dim + int(self.include_time) != self.n_channels:
            raise RocketError("dataset layout differs from the one the kernels were drawn for")
        feats = featurize(data, self.kernels, self.include_time)
        return predict_scores(self.classifier, feats, data.labels, "rocket", provenance or data.digest, path_index)

    def save(self, path) -> None:
        """Write kernels and classifier to a versioned ``.npz`` artifact."""
        w, off, lengths, biases, dil, _, ch = _pack(self.kernels)
        payload = dict(
            format="lrtbench-rocket", version=ARTIFACT_VERSION,
            weights=w, offsets=off, lengths=lengths, biases=biases, dilations=dil,
            paddings=np.array([k.padding for k in self.kernels]), channels=ch,
            l_input=self.l_input, n_channels=self.n_channels, include_time=self.include_time,
        )
        c = self.classifier
        if c is not None:
            payload.update(coef=c.coef, intercept=c.intercept, lam=c.lam, mean=c.mean, scale=c.scale, keep=c.keep)
        np.savez(path, **payload)

    @classmethod
    def load(cls, path) -> "RocketModel":
        with np.load(path, allow_pickle=False) as z:
            if str(z["format"]) != "lrtbench-rocket":
                raise RocketError("not a rocket artifact")
            if int(z["version"]) != ARTIFACT_VERSION:
                raise RocketError(f"unsupported artifact version {int(z['version'])}")
            kernels = [
                RocketKernel(z["weights"][o:o + n].copy(), float(b), int(d), bool(p), int(c))
                for o, n, b, d, p, c in zip(z["offsets"], z["lengths"], z["biases"], z["dilations"],
                                            z["paddings"], z["channels"])
            ]
            clf = None
            if "coef" in z:
                clf = LinearClassifier(z["coef"], float(z["intercept"]), float(z["lam"]), z["mean"],
                                       z["scale"], z["keep"])
            return cls(kernels, clf, int(z["l_input"]), int(z["n_channels"]), bool(z["include_time"]))
