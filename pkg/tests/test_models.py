import math

import numpy as np
import pytest

from lrtbench.models import (
    ModelError, ModelSpec, covariance, diffusion_coeff, drift, interaction_kernel, make_model_pair,
    noise_diag, pair_manifest, potential,
)


def test_double_well_default_coefficients():
    pair = make_model_pair("potential-gradient", {})
    assert pair.spec0.theta == pytest.approx((0.25, 0.0, -0.5, 0.0, 0.25))
    assert pair.spec1.theta == pytest.approx((0.0, 0.0, 0.0, 0.0, 0.25))
    assert pair.dim == 1


def test_double_well_critical_point_and_quartic():
    pair = make_model_pair("potential-gradient", {})
    assert drift(pair.spec0, 0.0, np.array([1.0]))[0] == pytest.approx(0.0, abs=1e-15)
    assert drift(pair.spec0, 0.0, np.array([-1.0]))[0] == pytest.approx(0.0, abs=1e-15)
    # quartic potential x^4/4 has gradient x^3
    assert drift(pair.spec1, 0.0, np.array([2.0]))[0] == pytest.approx(-8.0)


def test_potential_gradient_matches_finite_difference():
    pair = make_model_pair("potential-gradient", {"theta0": (0.3, -0.2, 0.1, 0.4, 0.05)})
    spec = pair.spec0
    for x in (-1.7, -0.4, 0.3, 1.2):
        h = 1e-6
        fd = (potential(spec, np.array([x + h])) - potential(spec, np.array([x - h]))) / (2 * h)
        assert drift(spec, 0.0, np.array([x]))[0] == pytest.approx(-float(fd), rel=1e-6, abs=1e-8)


def test_linear_nonlinear_drift_value():
    pair = make_model_pair("linear-nonlinear", {})
    got = drift(pair.spec0, 0.5, np.array([1.0]))[0]
    assert got == pytest.approx(1.0 - math.pi, abs=1e-14)
    # second model: -0.1 x + cos(pi x)
    assert drift(pair.spec1, 1.0, np.array([2.0]))[0] == pytest.approx(-0.2 + 1.0, abs=1e-14)
    assert drift(pair.spec1, 0.3, np.array([0.5]))[0] == pytest.approx(-0.05, abs=1e-14)


def test_degenerate_constant_drift_pair():
    pair = make_model_pair("constant-drift", {"a0": 0, "a1": 0})
    x = np.random.default_rng(0).normal(size=(4, 1))
    assert np.array_equal(drift(pair.spec0, 0.0, x), drift(pair.spec1, 0.0, x))


def test_constant_drift_dimension_broadcast():
    pair = make_model_pair("constant-drift", {"d": 3})
    assert pair.dim == 3
    assert drift(pair.spec1, 0.0, np.zeros((2, 3))) == pytest.approx(np.ones((2, 3)))


def test_interacting_particles_dimension():
    assert make_model_pair("interacting-particles", {"N": 3, "d1": 2}).dim == 6
    assert make_model_pair("interacting-particles", {"N": 12, "d1": 2}).dim == 24


def test_interaction_kernel_levels():
    pair = make_model_pair("interacting-particles", {})
    assert interaction_kernel(pair.spec0, 1.0) == pytest.approx(0.2)
    assert interaction_kernel(pair.spec0, 1.5) == pytest.approx(2.0)
    assert interaction_kernel(pair.spec1, 3.0) == 0.0
    # breakpoints belong to the interval on their right
    assert interaction_kernel(pair.spec0, math.sqrt(2)) == pytest.approx(2.0)
    assert interaction_kernel(pair.spec0, 2.0) == 0.0
    with pytest.raises(ModelError):
        interaction_kernel(pair.spec0, -0.1)


def test_interacting_drift_by_hand():
    pair = make_model_pair("interacting-particles", {"N": 2, "d1": 1})
    x = np.array([0.0, 1.0])  # distance 1 -> level 0.2 under model 0
    b = drift(pair.spec0, 0.0, x)
    # (1/N) * phi(r) * (x_a - x_b)
    assert b == pytest.approx([0.5 * 0.2 * (0 - 1), 0.5 * 0.2 * (1 - 0)])
    att = make_model_pair("interacting-particles", {"N": 2, "d1": 1, "ips_sign": "attractive"})
    assert drift(att.spec0, 0.0, x) == pytest.approx(-b)


def test_interacting_drift_is_translation_invariant():
    pair = make_model_pair("interacting-particles", {"N": 4, "d1": 2})
    x = np.random.default_rng(3).normal(size=8)
    shift = np.tile([0.7, -1.3], 4)
    assert drift(pair.spec1, 0.0, x + shift) == pytest.approx(drift(pair.spec1, 0.0, x), abs=1e-12)


def test_diffusion_coefficients():
    ou = make_model_pair("ou", {"d": 3})
    assert np.array_equal(diffusion_coeff(ou.spec0, np.zeros(3)), np.eye(3))
    ln = make_model_pair("linear-nonlinear", {})
    assert np.array_equal(diffusion_coeff(ln.spec0, np.array([0.0])), np.zeros((1, 1)))
    assert covariance(ln.spec0, np.array([2.0])) == pytest.approx(np.array([[4.0]]))
    ips = make_model_pair("interacting-particles", {"N": 3, "d1": 2})
    assert np.array_equal(diffusion_coeff(ips.spec0, np.zeros(6)), np.eye(6))
    assert noise_diag(make_model_pair("constant-drift", {"sigma": 0.5}).spec0, np.zeros(1)) == pytest.approx([0.5])


def test_ou_drift_is_linear():
    pair = make_model_pair("ou", {"d": 2})
    x = np.array([[1.0, -2.0]])
    assert drift(pair.spec0, 0.0, x) == pytest.approx(-x)
    assert drift(pair.spec1, 0.0, x) == pytest.approx(-0.5 * x)


@pytest.mark.parametrize("family,overrides", [
    ("constant-drift", {"bogus": 1}),
    ("ou", {"N": 3}),
    ("nope", {}),
    ("interacting-particles", {"levels0": (1.0, 2.0, 3.0)}),
    ("constant-drift", {"sigma": -1.0}),
    ("potential-gradient", {"theta0": (1.0, 2.0)}),
])
def test_invalid_pairs_rejected(family, overrides):
    with pytest.raises(ModelError):
        make_model_pair(family, overrides)


def test_swapped_and_manifest():
    pair = make_model_pair("ou", {"theta1": -0.25})
    sw = pair.swapped()
    assert sw.spec0 == pair.spec1 and sw.spec1 == pair.spec0
    man = pair_manifest(pair)
    assert man["model.family"] == "ou"
    assert float(man["model.theta1"]) == -0.25
    assert man["model.sigma"] == "1.0"


def test_spec_is_immutable():
    spec = ModelSpec("ou", (-1.0,), 1)
    with pytest.raises(Exception):
        spec.sigma = 2.0
