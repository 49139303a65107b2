"""Euler-Maruyama simulation, downsampling and labelled dataset generation."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, rng
from .models import ModelPair, ModelSpec, drift, noise_diag, pair_manifest


class SimulationError(RuntimeError):
    """Non-finite state or invalid simulation request."""


@dataclass(frozen=True)
class SimConfig:
    """Fine step, observation grid and dataset size.

    ``n_obs`` is the number of observation gaps L, so an observed path has
    ``n_obs + 1`` points on ``0, dt, ..., t_final``.
    """

    dt: float
    n_obs: int
    t_final: float
    n_paths: int = 2000
    delta: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not (self.delta > 0 and self.dt > 0 and self.t_final > 0):
            raise SimulationError("delta, dt and t_final must be positive")
        if self.n_obs < 1:
            raise SimulationError("n_obs must be >= 1")
        ratio = self.dt / self.delta
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise SimulationError(f"dt={self.dt} is not an integer multiple of delta={self.delta}")
        if abs(self.n_obs * self.dt - self.t_final) > 1e-12 * max(1.0, self.t_final):
            raise SimulationError(f"n_obs * dt = {self.n_obs * self.dt} != t_final = {self.t_final}")
        if self.n_paths < 2 or self.n_paths % 2:
            raise SimulationError("n_paths must be a positive even number")
        if self.seed < 0:
            raise SimulationError("seed must be nonnegative")

    @property
    def stride(self) -> int:
        return int(round(self.dt / self.delta))

    @property
    def n_fine(self) -> int:
        return self.n_obs * self.stride

    def fine_times(self) -> np.ndarray:
        return np.arange(self.n_fine + 1) * self.delta

    def manifest(self) -> dict[str, str]:
        return {
            "sim.delta": repr(self.delta),
            "sim.dt": repr(self.dt),
            "sim.n_obs": str(self.n_obs),
            "sim.t_final": repr(self.t_final),
            "sim.n_paths": str(self.n_paths),
            "seed": str(self.seed),
        }


@dataclass
class TimeSeriesPath:
    times: np.ndarray
    states: np.ndarray
    kind: str = "observed"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if self.times.ndim != 1 or len(self.times) != len(self.states):
            raise SimulationError("times and states must have matching lengths")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise SimulationError("times must start at 0 and increase strictly")
        if self.kind not in ("fine", "observed"):
            raise SimulationError(f"unknown grid kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass
class Dataset:
    """Labelled observed paths on a shared grid, optionally with fine twins.

    Arrays: ``observed`` (M, L+1, d), ``labels`` (M,), ``times`` (L+1,),
    ``fine`` (M, n_fine+1, d) and ``fine_times`` when retained.
    """

    observed: np.ndarray
    labels: np.ndarray
    times: np.ndarray
    fine: np.ndarray | None = None
    fine_times: np.ndarray | None = None
    manifest: dict[str, str] = field(default_factory=dict)
    pair: ModelPair | None = None
    config: SimConfig | None = None
    imported: bool = False

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.observed.ndim != 3 or self.observed.shape[0] != len(self.labels):
            raise SimulationError("observed must be (M, L+1, d) with one label per path")
        if self.observed.shape[1] != len(self.times):
            raise SimulationError("observed paths and time grid disagree in length")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise SimulationError("labels must be 0 or 1")
        if self.fine is not None and self.fine.shape[0] != len(self.labels):
            raise SimulationError("fine paths must parallel observed paths")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.observed.shape[2]

    @property
    def paths(self) -> list[TimeSeriesPath]:
        return [TimeSeriesPath(self.times, p, "observed") for p in self.observed]

    @property
    def fine_paths(self) -> list[TimeSeriesPath] | None:
        if self.fine is None:
            return None
        return [TimeSeriesPath(self.fine_times, p, "fine") for p in self.fine]

    @property
    def digest(self) -> str:
        """SHA-256 of the observed content (grid, labels, paths)."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.times, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.observed, dtype="<f8").tobytes())
        return h.hexdigest()

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.observed[idx], self.labels[idx], self.times,
            None if self.fine is None else self.fine[idx], self.fine_times,
            dict(self.manifest), self.pair, self.config, self.imported,
        )


def euler_maruyama(spec: ModelSpec, x0: np.ndarray, noise: np.ndarray, delta: float) -> np.ndarray:
    """Batched Euler-Maruyama with pre-drawn standard normal increments.

    ``x0`` is (B, d), ``noise`` is (B, n, d); returns (B, n+1, d).
    """
    x = np.array(x0, dtype=float)
    n = noise.shape[1]
    out = np.empty((x.shape[0], n + 1, x.shape[1]))
    out[:, 0] = x
    sq = math.sqrt(delta)
    for k in range(n):
        t = k * delta
        # overflow is reported below as a SimulationError
        with np.errstate(over="ignore", invalid="ignore"):
            x = x + drift(spec, t, x) * delta + noise_diag(spec, x) * (sq * noise[:, k])
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(x), axis=1))[0])
            raise SimulationError(
                f"non-finite state at step {k + 1} (batch row {bad}) for family {spec.family}"
            )
        out[:, k + 1] = x
    return out


def simulate_fine_path(spec: ModelSpec, x0, config: SimConfig, stream: np.random.Generator) -> TimeSeriesPath:
    """One Euler-Maruyama path on ``0, delta, ..., t_final``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (spec.dim,):
        raise SimulationError(f"x0 must have length {spec.dim}")
    z = stream.standard_normal((1, config.n_fine, spec.dim))
    states = euler_maruyama(spec, x0[None], z, config.delta)[0]
    return TimeSeriesPath(config.fine_times(), states, "fine")


def downsample(fine: TimeSeriesPath, stride: int) -> TimeSeriesPath:
    """Every ``stride``-th row of ``fine``, both endpoints included."""
    if stride < 1:
        raise SimulationError("stride must be positive")
    n = len(fine.times) - 1
    if n % stride:
        raise SimulationError(f"stride {stride} does not divide {n} fine steps")
    return TimeSeriesPath(fine.times[::stride].copy(), fine.states[::stride].copy(), "observed")


def _simulate_block(spec, config, cls, start, stop):
    d = spec.dim
    x0 = np.empty((stop - start, d))
    z = np.empty((stop - start, config.n_fine, d))
    for j, i in enumerate(range(start, stop)):
        g = rng.stream(config.seed, rng.SIMULATION, cls, i)
        x0[j] = g.standard_normal(d)
        z[j] = g.standard_normal((config.n_fine, d))
    try:
        return euler_maruyama(spec, x0, z, config.delta)
    except SimulationError as exc:
        raise SimulationError(f"class {cls}, paths {start}..{stop - 1}: {exc}") from exc


def generate_dataset(
    pair: ModelPair,
    config: SimConfig,
    keep_fine: bool = False,
    workers: int = 1,
    block: int = 250,
) -> Dataset:
    """Simulate ``n_paths / 2`` paths per class and downsample them.

    Path ``i`` of class ``c`` draws its initial condition and increments
    from the stream keyed ``(seed, c, i)``, so the result does not depend on
    ``workers`` or ``block``.  Class-0 paths come first.
    """
    half = config.n_paths // 2
    jobs = [
        (spec, cls, s, min(s + block, half))
        for cls, spec in ((0, pair.spec0), (1, pair.spec1))
        for s in range(0, half, block)
    ]
    run = lambda job: _simulate_block(job[0], config, job[1], job[2], job[3])  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            blocks = list(ex.map(run, jobs))
    else:
        blocks = [run(j) for j in jobs]
    fine = np.concatenate(blocks, axis=0)
    stride = config.stride
    observed = np.ascontiguousarray(fine[:, ::stride])
    fine_times = config.fine_times()
    labels = np.repeat([0, 1], half)
    manifest = {
        "schema_version": "1",
        "tool_version": __version__,
        **pair_manifest(pair),
        **config.manifest(),
        "keep_fine": str(bool(keep_fine)).lower(),
        "rng": "philox/seedsequence(seed,0,class,index)",
    }
    return Dataset(
        observed=observed,
        labels=labels,
        times=fine_times[::stride].copy(),
        fine=fine if keep_fine else None,
        fine_times=fine_times if keep_fine else None,
        manifest=manifest,
        pair=pair,
        config=config,
    )
