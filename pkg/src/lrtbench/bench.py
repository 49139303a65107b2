"""Experiment protocol: the case matrix, repeated train/test runs and sweeps.

A benchmark fixes one dataset per setting.  The LRT classifiers score the
whole dataset once (they need no training); ROCKET is retrained on a fresh
stratified 3/4 split in every run and scored on the held-out quarter.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, rng
from .lrt import ScoreSet, lrt_scores
from .metrics import FiveNumberSummary, MetricsSummary, RocCurve, roc_curve, summarize, summarize_runs
from .models import ModelPair, make_model_pair
from .rocket import RocketModel
from .simulate import Dataset, SimConfig, generate_dataset

log = logging.getLogger(__name__)

LRT_CLASSIFIERS = {
    "lrt-hidden-truth": "hidden-truth",
    "lrt-numerical": "numerical",
    "lrt-exact": None,  # exact-bm or exact-ou, by family
}
TRAINED_CLASSIFIERS = ("rocket",)
CLASSIFIERS = tuple(LRT_CLASSIFIERS) + TRAINED_CLASSIFIERS
DEFAULT_CLASSIFIERS = ("lrt-hidden-truth", "lrt-numerical", "rocket")

# case -> (family, per-setting overrides, d, L, t_L, dt)
_TABLE = {
    "a": ("constant-drift", [{}] * 4, [1] * 4, [10, 20, 40, 80], [1, 2, 4, 8], [0.1] * 4),
    "b": ("potential-gradient", [{}] * 4, [1] * 4, [20, 40, 80, 160], [2, 4, 8, 16], [0.1] * 4),
    "c": ("ou", [{"d": d} for d in (1, 2, 4, 8)], [1, 2, 4, 8], [20] * 4, [2] * 4, [0.1] * 4),
    "d": ("interacting-particles", [{"N": n, "d1": 2} for n in (3, 6, 12, 24)],
          [6, 12, 24, 48], [20] * 4, [2] * 4, [0.1] * 4),
    "e": ("linear-nonlinear", [{}] * 4, [1] * 4, [5, 10, 20, 40], [1] * 4, [0.2, 0.1, 0.05, 0.025]),
    "f": ("interacting-particles", [{"N": 12, "d1": 2}] * 4, [24] * 4, [10, 20, 40, 80], [4] * 4,
          [0.4, 0.2, 0.1, 0.05]),
}
CASES = tuple(_TABLE)
SWEEP_KINDS = ("time-length", "noise", "training-size")


class BenchError(RuntimeError):
    pass


@dataclass(frozen=True)
class CaseSetting:
    case: str
    setting: int
    family: str
    d: int
    n_obs: int
    t_final: float
    dt: float
    delta: float = 0.01
    n_paths: int = 2000
    train_fraction: float = 0.75
    overrides: tuple = ()

    @property
    def label(self) -> str:
        return f"{self.case}{self.setting}" if self.setting else self.case

    def pair(self) -> ModelPair:
        return make_model_pair(self.family, dict(self.overrides))

    def sim_config(self, seed: int) -> SimConfig:
        return SimConfig(self.dt, self.n_obs, self.t_final, self.n_paths, self.delta, seed)

    def with_overrides(self, **kw) -> "CaseSetting":
        ov = dict(self.overrides)
        ov.update(kw)
        return replace(self, overrides=tuple(sorted(ov.items())))

    def manifest(self) -> dict[str, str]:
        return {
            "case": self.case, "setting": str(self.setting), "family": self.family,
            "d": str(self.d), "L": str(self.n_obs), "t_L": repr(float(self.t_final)),
            "dt": repr(self.dt), "delta": repr(self.delta), "M": str(self.n_paths),
            "train_fraction": repr(self.train_fraction),
            "overrides": ";".join(f"{k}={v}" for k, v in self.overrides),
        }


def resolve_case(case: str, setting: int) -> CaseSetting:
    """Look up one row of the 6 x 4 case matrix."""
    if case not in _TABLE:
        raise BenchError(f"unknown case {case!r}; expected one of {sorted(_TABLE)}")
    if setting not in (1, 2, 3, 4):
        raise BenchError(f"setting must be 1..4, got {setting!r}")
    family, ovs, ds, ls, tls, dts = _TABLE[case]
    i = setting - 1
    dt = dts[i]
    # a 0.025 gap is not a whole number of 0.01 steps
    delta = 0.005 if (case, setting) == ("e", 4) else 0.01
    return CaseSetting(case, setting, family, ds[i], ls[i], float(tls[i]), dt, delta,
                       overrides=tuple(sorted(ovs[i].items())))


def split_indices(labels, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Label-stratified random split into sorted train and test indices."""
    if not 0.0 < train_fraction < 1.0:
        raise BenchError("train fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    g = rng.stream(seed, rng.SPLIT)
    train, test = [], []
    for c in (0, 1):
        idx = g.permutation(np.flatnonzero(labels == c))
        n_tr = int(round(train_fraction * len(idx)))
        if n_tr == 0 or n_tr == len(idx):
            raise BenchError(f"fraction {train_fraction} leaves an empty side for class {c}")
        train.append(idx[:n_tr])
        test.append(idx[n_tr:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def draw_train(labels, pool, size: int, seed: int) -> np.ndarray:
    """Stratified draw of ``size`` indices (half per class) from ``pool``."""
    labels = np.asarray(labels)
    pool = np.asarray(pool)
    if size % 2 or size < 2:
        raise BenchError(f"training size must be a positive even number, got {size}")
    g = rng.stream(seed, rng.SPLIT)
    out = []
    for c in (0, 1):
        idx = pool[labels[pool] == c]
        if len(idx) < size // 2:
            raise BenchError(f"pool has {len(idx)} class-{c} paths, fewer than {size // 2}")
        out.append(g.permutation(idx)[: size // 2])
    return np.sort(np.concatenate(out))


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    tr, te = split_indices(dataset.labels, train_fraction, seed)
    return dataset.subset(tr), dataset.subset(te)


@dataclass
class RunResult:
    run: int
    seed: int
    metrics: dict[str, MetricsSummary] = field(default_factory=dict)
    roc: dict[str, RocCurve] = field(default_factory=dict)
    scores: dict[str, ScoreSet] = field(default_factory=dict)
    model: RocketModel | None = None


@dataclass
class BenchmarkReport:
    """Per-run metrics for each classifier plus provenance."""

    setting: CaseSetting
    classifiers: list[str]
    runs: list[RunResult]
    manifest: dict[str, str]
    labels: np.ndarray | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def values(self, metric: str, classifier: str) -> np.ndarray:
        """Metric over the runs that carry ``classifier`` (external scores may cover one run)."""
        return np.array([getattr(r.metrics[classifier], metric) for r in self.runs if classifier in r.metrics])

    def typical_run(self, classifier: str) -> RunResult:
        return next(r for r in self.runs if classifier in r.roc)

    def summary(self, metric: str, classifier: str) -> FiveNumberSummary:
        return summarize_runs(self.values(metric, classifier))

    def median(self, metric: str, classifier: str) -> float:
        return self.summary(metric, classifier).median


def lrt_mode(name: str, family: str) -> str:
    mode = LRT_CLASSIFIERS[name]
    if mode is None:
        if family == "constant-drift":
            return "exact-bm"
        if family == "ou":
            return "exact-ou"
        raise BenchError(f"no exact likelihood for family {family!r}")
    return mode


def _score_lrt(dataset: Dataset, classifiers, family: str, rows=None):
    out = {}
    for name in classifiers:
        if name in LRT_CLASSIFIERS:
            s = lrt_scores(dataset, mode=lrt_mode(name, family))
            if rows is not None:
                s = s.subset(rows)
            out[name] = (s, summarize(s), roc_curve(s))
    return out


def _set_threads(workers: int) -> None:
    import numba

    numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))


def run_case(
    setting: CaseSetting,
    runs: int = 40,
    seed: int = 0,
    classifiers=DEFAULT_CLASSIFIERS,
    n_kernels: int = 10_000,
    regenerate: bool = False,
    workers: int = 1,
    dataset: Dataset | None = None,
    keep_scores: bool = True,
    keep_models: bool = False,
    fixed_test=None,
    train_size: int | None = None,
) -> BenchmarkReport:
    """Run the repeated-split protocol on one setting.

    With ``regenerate`` every run simulates its own dataset (seeded by the
    run seed); otherwise one dataset, seeded by ``seed``, is re-split.

    ``fixed_test`` pins the test indices for every run; the LRT is then
    scored on that test set and each run trains on ``train_size`` paths
    drawn from the remainder.
    """
    classifiers = list(dict.fromkeys(classifiers))
    if not classifiers:
        raise BenchError("no classifiers selected")
    unknown = [c for c in classifiers if c not in CLASSIFIERS]
    if unknown:
        raise BenchError(f"unknown classifier(s) {unknown}; expected a subset of {CLASSIFIERS}")
    if runs < 1:
        raise BenchError("runs must be >= 1")
    if fixed_test is not None:
        if regenerate:
            raise BenchError("a fixed test set needs a fixed dataset")
        fixed_test = np.sort(np.asarray(fixed_test, dtype=np.int64))
    _set_threads(workers)
    need_fine = "lrt-hidden-truth" in classifiers
    timings = {"simulate": 0.0, "lrt": 0.0, "rocket": 0.0}

    def make_dataset(s):
        t0 = time.perf_counter()
        try:
            ds = generate_dataset(setting.pair(), setting.sim_config(s), keep_fine=need_fine, workers=workers)
        except Exception as exc:
            raise BenchError(f"case {setting.label}: simulation failed: {exc}") from exc
        timings["simulate"] += time.perf_counter() - t0
        return ds

    def score_lrt(ds, run):
        t0 = time.perf_counter()
        try:
            res = _score_lrt(ds, classifiers, setting.family, fixed_test)
        except Exception as exc:
            raise BenchError(f"case {setting.label}, run {run}: LRT scoring failed: {exc}") from exc
        timings["lrt"] += time.perf_counter() - t0
        return res

    if dataset is None and not regenerate:
        dataset = make_dataset(seed)
    lrt_fixed = score_lrt(dataset, 0) if not regenerate else None

    results = []
    for r in range(runs):
        run_seed = rng.derive_seed(seed, r)
        ds = make_dataset(run_seed) if regenerate else dataset
        lrt_res = score_lrt(ds, r) if regenerate else lrt_fixed
        res = RunResult(r, run_seed)
        for name, (s, summ, roc) in lrt_res.items():
            res.metrics[name], res.roc[name] = summ, roc
            if keep_scores:
                res.scores[name] = s
        if "rocket" in classifiers:
            t0 = time.perf_counter()
            try:
                if fixed_test is None:
                    tr, te = split_indices(ds.labels, setting.train_fraction, run_seed)
                else:
                    te = fixed_test
                    pool = np.setdiff1d(np.arange(len(ds)), te)
                    tr = draw_train(ds.labels, pool, train_size or len(pool), run_seed)
                model = RocketModel.fit(ds.subset(tr), n_kernels, seed=run_seed)
                s = model.scores(ds.subset(te), path_index=te, provenance=ds.digest)
            except Exception as exc:
                raise BenchError(f"case {setting.label}, run {r}: rocket failed: {exc}") from exc
            timings["rocket"] += time.perf_counter() - t0
            res.metrics["rocket"], res.roc["rocket"] = summarize(s), roc_curve(s)
            if keep_scores:
                res.scores["rocket"] = s
            if keep_models:
                res.model = model
        results.append(res)
        log.info("case %s run %d/%d done", setting.label, r + 1, runs)

    manifest = {
        "schema_version": "1",
        "tool_version": __version__,
        **{f"setting.{k}": v for k, v in setting.manifest().items()},
        "runs": str(runs),
        "seed": str(seed),
        "classifiers": ",".join(classifiers),
        "rocket.kernels": str(n_kernels),
        "regenerate": str(bool(regenerate)).lower(),
        "dataset.digest": "per-run" if regenerate else dataset.digest,
        "run_seeds": ",".join(str(r.seed) for r in results),
    }
    if fixed_test is not None:
        manifest["split.test_size"] = str(len(fixed_test))
        manifest["split.train_size"] = str(train_size or len(dataset) - len(fixed_test))
    for k, v in timings.items():
        log.info("case %s: %s took %.2f s", setting.label, k, v)
    return BenchmarkReport(setting, classifiers, results, manifest,
                           None if regenerate else dataset.labels.copy(), timings)


def add_scores(report: BenchmarkReport, name: str, scores: ScoreSet, run: int | None = None) -> None:
    """Attach an externally produced score set as classifier ``name``.

    With ``run=None`` the same scores are replicated across every run.
    """
    summ, roc = summarize(scores), roc_curve(scores)
    targets = report.runs if run is None else [report.runs[run]]
    for r in targets:
        r.metrics[name], r.roc[name], r.scores[name] = summ, roc, scores
    if name not in report.classifiers:
        report.classifiers.append(name)


def sweep(
    kind: str,
    values,
    base: CaseSetting | None = None,
    runs: int = 40,
    seed: int = 0,
    classifiers=DEFAULT_CLASSIFIERS,
    n_kernels: int = 10_000,
    test_size: int = 500,
    workers: int = 1,
) -> list[tuple[float, BenchmarkReport]]:
    """One report per value of path length, noise scale or training size.

    The default base is the 12-dimensional particle system observed every
    0.1.  The training-size sweep uses noise 0.4 there; all its values share
    one dataset and one test set of ``test_size`` paths.
    """
    if kind not in SWEEP_KINDS:
        raise BenchError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")
    values = list(values)
    if not values:
        raise BenchError("no sweep values")
    if base is None:
        base = replace(resolve_case("d", 2), case="ips12", setting=0)
        if kind == "training-size":
            base = base.with_overrides(sigma=0.4)
    out = []
    if kind == "training-size":
        sizes = []
        for v in values:
            if int(v) != v or int(v) < 4 or int(v) % 2:
                raise BenchError(f"training size must be an even integer >= 4, got {v}")
            sizes.append(int(v))
        if test_size < 2 or test_size % 2:
            raise BenchError(f"test size must be a positive even integer, got {test_size}")
        # one dataset and one test set shared by every training size
        total = max(sizes) + test_size
        shared = replace(base, n_paths=total, train_fraction=max(sizes) / total)
        need_fine = "lrt-hidden-truth" in classifiers
        ds = generate_dataset(shared.pair(), shared.sim_config(seed), keep_fine=need_fine, workers=workers)
        _, test = split_indices(ds.labels, max(sizes) / total, seed)
        for v, m_train in zip(values, sizes):
            log.info("sweep %s = %s", kind, v)
            st = replace(shared, train_fraction=m_train / total)
            out.append((v, run_case(st, runs, seed, classifiers, n_kernels, workers=workers, dataset=ds,
                                    fixed_test=test, train_size=m_train)))
        return out
    for v in values:
        if kind == "time-length":
            n_obs = round(v / base.dt)
            if v <= 0 or abs(n_obs * base.dt - v) > 1e-9:
                raise BenchError(f"path length {v} is not a positive multiple of dt={base.dt}")
            st = replace(base, t_final=float(n_obs * base.dt), n_obs=n_obs)
        else:
            if not v > 0:
                raise BenchError(f"noise scale must be positive, got {v}")
            st = base.with_overrides(sigma=float(v))
        log.info("sweep %s = %s", kind, v)
        out.append((v, run_case(st, runs, seed, classifiers, n_kernels, workers=workers)))
    return out


def lrt_sweep_auc(reports, classifier: str = "lrt-hidden-truth") -> list[float]:
    return [rep.median("auc", classifier) for _, rep in reports]


def describe(report: BenchmarkReport) -> str:
    lines = [f"case {report.setting.label}: {len(report.runs)} run(s)"]
    for c in report.classifiers:
        auc = report.summary("auc", c)
        acc = report.summary("acc_star", c)
        lines.append(f"  {c:<18} AUC median {auc.median:.4f}  ACC* median {acc.median:.4f}")
    return "\n".join(lines)


__all__ = [
    "CaseSetting", "BenchmarkReport", "RunResult", "resolve_case", "split", "split_indices",
    "run_case", "sweep", "add_scores", "describe",
]
