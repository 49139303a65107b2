"""Diffusion model families and their two-class parameterizations.

Every family is written as ``dX = b(t, X) dt + sigma(X) dB`` where the two
classes of a :class:`ModelPair` differ only in the drift parameters.  All
shipped diffusion coefficients are diagonal, so the models expose the
diagonal of ``sigma(x)`` through :func:`noise_diag` for vectorised use and
the full matrices through :func:`diffusion_coeff` / :func:`covariance`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

FAMILIES = (
    "constant-drift",
    "potential-gradient",
    "linear-nonlinear",
    "ou",
    "interacting-particles",
)

IPS_SIGNS = ("printed", "attractive")


class ModelError(ValueError):
    """Invalid model family, parameter, or state dimension."""


@dataclass(frozen=True)
class ModelSpec:
    """One diffusion: a family, its drift parameters and noise scale.

    ``theta`` meaning by family:

    * constant-drift: the drift vector itself (length ``dim``).
    * potential-gradient: coefficients of ``V(x) = sum_j theta_j |x|^j``,
      j = 0..4; the drift is ``-grad V``.
    * linear-nonlinear: weights of ``x``, ``cos(pi x)``, ``sin(pi t)``.
    * ou: the scalar rate in ``dX = theta X dt``.
    * interacting-particles: kernel levels on the intervals cut by
      ``kernel_breakpoints`` (the last level applies beyond the last
      breakpoint and must be 0).
    """

    family: str
    theta: tuple[float, ...]
    dim: int
    sigma: float = 1.0
    n_agents: int | None = None
    agent_dim: int | None = None
    kernel_breakpoints: tuple[float, ...] = ()
    ips_sign: str = "printed"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ModelError(f"unknown family {self.family!r}")
        if self.dim < 1:
            raise ModelError("dim must be >= 1")
        if not self.sigma > 0 or not math.isfinite(self.sigma):
            raise ModelError(f"sigma must be positive and finite, got {self.sigma}")
        if not all(math.isfinite(v) for v in self.theta):
            raise ModelError("theta must be finite")
        if self.family == "constant-drift" and len(self.theta) != self.dim:
            raise ModelError("constant-drift theta must have length dim")
        if self.family == "potential-gradient" and len(self.theta) != 5:
            raise ModelError("potential-gradient theta has 5 coefficients")
        if self.family == "linear-nonlinear":
            if len(self.theta) != 3:
                raise ModelError("linear-nonlinear theta has 3 coefficients")
            if self.dim != 1:
                raise ModelError("linear-nonlinear family is one-dimensional")
        if self.family == "ou" and len(self.theta) != 1:
            raise ModelError("ou theta is a scalar")
        if self.family == "interacting-particles":
            if self.n_agents is None or self.agent_dim is None:
                raise ModelError("interacting-particles needs n_agents and agent_dim")
            if self.n_agents < 1 or self.agent_dim < 1:
                raise ModelError("n_agents and agent_dim must be >= 1")
            if self.dim != self.n_agents * self.agent_dim:
                raise ModelError("dim must equal n_agents * agent_dim")
            bps = self.kernel_breakpoints
            if len(self.theta) != len(bps) + 1:
                raise ModelError("need one kernel level per breakpoint interval")
            if any(b <= 0 for b in bps) or list(bps) != sorted(set(bps)):
                raise ModelError("kernel breakpoints must be positive and increasing")
            if self.theta[-1] != 0.0:
                raise ModelError("kernel must vanish beyond its last breakpoint")
            if self.ips_sign not in IPS_SIGNS:
                raise ModelError(f"ips_sign must be one of {IPS_SIGNS}")

    @property
    def time_dependent(self) -> bool:
        return self.family == "linear-nonlinear" and self.theta[2] != 0.0


@dataclass(frozen=True)
class ModelPair:
    """Class-0 and class-1 diffusions sharing the diffusion coefficient."""

    spec0: ModelSpec
    spec1: ModelSpec
    defaults: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a, b = self.spec0, self.spec1
        same_noise = (
            a.family == b.family
            and a.dim == b.dim
            and a.sigma == b.sigma
            and a.n_agents == b.n_agents
            and a.agent_dim == b.agent_dim
            and a.kernel_breakpoints == b.kernel_breakpoints
            and a.ips_sign == b.ips_sign
        )
        if not same_noise:
            raise ModelError("pair members must share family, dimension and diffusion coefficient")

    @property
    def family(self) -> str:
        return self.spec0.family

    @property
    def dim(self) -> int:
        return self.spec0.dim

    def swapped(self) -> "ModelPair":
        return ModelPair(self.spec1, self.spec0, self.defaults)

    def with_sigma(self, sigma: float) -> "ModelPair":
        return ModelPair(replace(self.spec0, sigma=sigma), replace(self.spec1, sigma=sigma), self.defaults)


def _vec(value, n=None) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if n is not None and arr.size == 1 and n > 1:
        arr = np.full(n, arr[0])
    return tuple(float(v) for v in arr)


_ALLOWED = {
    "constant-drift": {"a0", "a1", "theta0", "theta1", "d", "sigma"},
    "potential-gradient": {"theta0", "theta1", "d", "sigma"},
    "linear-nonlinear": {"theta0", "theta1", "sigma"},
    "ou": {"theta0", "theta1", "d", "sigma"},
    "interacting-particles": {"N", "d1", "sigma", "levels0", "levels1", "breakpoints", "ips_sign"},
}


def make_model_pair(family: str, overrides: Mapping[str, Any] | None = None) -> ModelPair:
    """Build the default two-class pair of ``family`` with ``overrides`` applied.

    Recognised override keys depend on the family (see ``_ALLOWED``).  The
    resolved parameters are kept in ``pair.defaults`` for the manifest.
    """
    if family not in FAMILIES:
        raise ModelError(f"unknown family {family!r}")
    overrides = dict(overrides or {})
    unknown = set(overrides) - _ALLOWED[family]
    if unknown:
        raise ModelError(f"unrecognised override(s) for {family}: {sorted(unknown)}")
    sigma = float(overrides.get("sigma", 1.0))

    if family == "constant-drift":
        d = int(overrides.get("d", 1))
        theta0 = _vec(overrides.get("theta0", overrides.get("a0", 0.0)), d)
        theta1 = _vec(overrides.get("theta1", overrides.get("a1", 1.0)), d)
        spec0 = ModelSpec(family, theta0, d, sigma)
        spec1 = ModelSpec(family, theta1, d, sigma)
        resolved = {"d": d, "theta0": theta0, "theta1": theta1, "sigma": sigma}
    elif family == "potential-gradient":
        d = int(overrides.get("d", 1))
        theta0 = _vec(overrides.get("theta0", (0.25, 0.0, -0.5, 0.0, 0.25)))
        theta1 = _vec(overrides.get("theta1", (0.0, 0.0, 0.0, 0.0, 0.25)))
        spec0 = ModelSpec(family, theta0, d, sigma)
        spec1 = ModelSpec(family, theta1, d, sigma)
        resolved = {"d": d, "theta0": theta0, "theta1": theta1, "sigma": sigma}
    elif family == "linear-nonlinear":
        theta0 = _vec(overrides.get("theta0", (-math.pi, 0.0, 1.0)))
        theta1 = _vec(overrides.get("theta1", (-0.1, 1.0, 0.0)))
        spec0 = ModelSpec(family, theta0, 1, sigma)
        spec1 = ModelSpec(family, theta1, 1, sigma)
        resolved = {"d": 1, "theta0": theta0, "theta1": theta1, "sigma": sigma}
    elif family == "ou":
        d = int(overrides.get("d", 1))
        theta0 = _vec(overrides.get("theta0", -1.0))
        theta1 = _vec(overrides.get("theta1", -0.5))
        spec0 = ModelSpec(family, theta0, d, sigma)
        spec1 = ModelSpec(family, theta1, d, sigma)
        resolved = {"d": d, "theta0": theta0, "theta1": theta1, "sigma": sigma}
    else:
        n = int(overrides.get("N", 3))
        d1 = int(overrides.get("d1", 2))
        bps = _vec(overrides.get("breakpoints", (math.sqrt(2.0), 2.0)))
        levels0 = _vec(overrides.get("levels0", (0.2, 2.0, 0.0)))
        levels1 = _vec(overrides.get("levels1", (2.0, 0.2, 0.0)))
        sign = str(overrides.get("ips_sign", "printed"))
        common = dict(n_agents=n, agent_dim=d1, kernel_breakpoints=bps, ips_sign=sign)
        spec0 = ModelSpec(family, levels0, n * d1, sigma, **common)
        spec1 = ModelSpec(family, levels1, n * d1, sigma, **common)
        resolved = {
            "d": n * d1, "N": n, "d1": d1, "sigma": sigma, "breakpoints": bps,
            "levels0": levels0, "levels1": levels1, "ips_sign": sign,
        }
    return ModelPair(spec0, spec1, {"family": family, **resolved})


def _check_dim(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != spec.dim:
        raise ModelError(f"state has trailing dimension {x.shape[-1:] or ()}, expected {spec.dim}")
    return x


def interaction_kernel(spec: ModelSpec, r):
    """Piecewise-constant interaction kernel evaluated at distances ``r``.

    Intervals are right-open: ``[0, b_1), [b_1, b_2), ..., [b_last, inf)``.
    """
    if spec.family != "interacting-particles":
        raise ModelError("interaction kernel is defined for interacting-particles only")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ModelError("distance must be nonnegative")
    idx = np.searchsorted(np.asarray(spec.kernel_breakpoints), r_arr, side="right")
    out = np.asarray(spec.theta)[idx]
    return float(out) if np.ndim(out) == 0 else out


def _ips_drift(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    n, d1 = spec.n_agents, spec.agent_dim
    pos = x.reshape(x.shape[:-1] + (n, d1))
    # diff[..., a, b, :] = X^a - X^b
    diff = pos[..., :, None, :] - pos[..., None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    phi = np.asarray(spec.theta)[np.searchsorted(np.asarray(spec.kernel_breakpoints), r, side="right")]
    force = np.sum(phi[..., None] * diff, axis=-2) / n
    if spec.ips_sign == "attractive":
        force = -force
    return force.reshape(x.shape)


def drift(spec: ModelSpec, t, x) -> np.ndarray:
    """Drift ``b_theta(t, x)``; ``x`` may carry leading batch axes.

    ``t`` is a scalar or broadcasts against ``x[..., 0]``.  Time-independent
    families ignore it.
    """
    x = _check_dim(spec, x)
    th = spec.theta
    fam = spec.family
    if fam == "constant-drift":
        return np.broadcast_to(np.asarray(th), x.shape).copy()
    if fam == "potential-gradient":
        # grad |x|^j = j |x|^(j-2) x; j = 1 is singular at 0 and treated as 0 there
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        r = np.sqrt(r2)
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0)
        grad = th[1] * g1 + 2.0 * th[2] * x + 3.0 * th[3] * r * x + 4.0 * th[4] * r2 * x
        return -grad
    if fam == "linear-nonlinear":
        t = np.asarray(t, dtype=float)
        if t.ndim:
            t = t[..., None]
        return th[0] * x + th[1] * np.cos(np.pi * x) + th[2] * np.sin(np.pi * t)
    if fam == "ou":
        return th[0] * x
    return _ips_drift(spec, x)


def potential(spec: ModelSpec, x) -> np.ndarray:
    """``V(x) = sum_j theta_j |x|^j`` for the potential-gradient family."""
    if spec.family != "potential-gradient":
        raise ModelError("potential is defined for potential-gradient only")
    x = _check_dim(spec, x)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return sum(c * r**j for j, c in enumerate(spec.theta))


def noise_diag(spec: ModelSpec, x) -> np.ndarray:
    """Diagonal of ``sigma(x)``, same shape as ``x``."""
    x = _check_dim(spec, x)
    if spec.family == "linear-nonlinear":
        return spec.sigma * x
    return np.full(x.shape, spec.sigma)


def diffusion_coeff(spec: ModelSpec, x) -> np.ndarray:
    """The d x d diffusion matrix at a single state."""
    x = _check_dim(spec, x)
    if x.ndim != 1:
        raise ModelError("diffusion_coeff takes a single state vector")
    return np.diag(noise_diag(spec, x))


def covariance(spec: ModelSpec, x) -> np.ndarray:
    """``Sigma(x) = sigma(x) sigma(x)^T``."""
    s = diffusion_coeff(spec, x)
    return s @ s.T


def pair_manifest(pair: ModelPair) -> dict[str, str]:
    """Flat, string-valued description of a pair for manifests."""
    out = {}
    for key, val in pair.defaults.items():
        if isinstance(val, tuple):
            out[f"model.{key}"] = ",".join(repr(v) for v in val)
        else:
            out[f"model.{key}"] = str(val)
    return out
