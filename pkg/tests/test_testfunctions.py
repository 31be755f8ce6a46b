import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radvisc.errors import DomainError
from radvisc.testfunctions import (
    Profile,
    coordinate_weighted_multid,
    bump,
    cutoff,
    origin_stress,
    poly_times,
    radial_multid,
    radial_test_from_multiD,
    random_tensor_family,
    smooth_step,
    smooth_step_deriv,
    sphere_area,
    sphere_rule,
    tensor,
    vanish_near_origin,
)


def central(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def test_smooth_step_values():
    assert smooth_step(-1.0) == 0.0
    assert smooth_step(0.0) == 0.0
    assert smooth_step(1.0) == 1.0
    assert smooth_step(3.0) == 1.0
    assert smooth_step(0.5) == pytest.approx(0.5)
    x = np.linspace(-0.5, 1.5, 401)
    assert np.all(np.diff(smooth_step(x)) >= 0.0)


def test_smooth_step_derivative():
    x = np.linspace(0.01, 0.99, 99)
    assert np.allclose(smooth_step_deriv(x), central(smooth_step, x), atol=1e-7)


@pytest.mark.parametrize("prof", [cutoff(0.5, 1.0), bump(0.3, 0.2), poly_times([1.0, -2.0, 0.5], bump(0.5, 0.4))])
def test_profile_derivatives(prof):
    x = np.linspace(0.0, 1.2, 241)[1:-1]
    assert np.allclose(prof.deriv(x), central(prof.value, x), atol=1e-6)


def test_cutoff_and_bump_supports():
    c = cutoff(0.5, 1.0)
    assert np.all(c(np.linspace(0, 0.5, 11)) == 1.0)
    assert np.all(c(np.linspace(1.0, 3, 11)) == 0.0)
    b = bump(0.3, 0.2)
    assert b(0.1) == 0.0 and b(0.5) == 0.0 and b(0.3) == pytest.approx(math.exp(-1))
    assert b.support == pytest.approx(0.5)
    with pytest.raises(DomainError):
        cutoff(1.0, 0.5)


def test_tensor_and_origin_stress_traces():
    psi, chi = cutoff(0.3, 0.45), cutoff(0.5, 1.0)
    t = np.linspace(0, 0.5, 11)
    phi = tensor(psi, chi)
    v0, d0 = phi.origin_trace(t)
    assert np.allclose(v0, psi(t)) and np.allclose(d0, 0.0)
    st_ = origin_stress(psi, chi)
    v0, d0 = st_.origin_trace(t)
    assert np.all(v0 == 0.0)
    assert np.allclose(d0, psi(t))
    assert st_.max_origin_value(t) == 0.0
    r = np.linspace(0.01, 1.2, 50)
    assert np.allclose(st_.phi_r(0.1, r), central(lambda x: st_.phi(0.1, x), r), atol=1e-6)
    assert np.allclose(st_.phi_t(0.35, r), central(lambda s: st_.phi(s, r), 0.35), atol=1e-6)


@pytest.mark.parametrize("a", [1e-1, 1e-2, 1e-3, 1e-4])
def test_vanish_near_origin(a):
    phi = origin_stress(cutoff(0.3, 0.45), cutoff(0.5, 1.0))
    phe = vanish_near_origin(phi, a)
    r_in = np.linspace(0.0, a, 20)
    assert np.all(phe.phi(0.1, r_in) == 0.0)
    r_out = np.linspace(2 * a, 1.2, 50)
    assert np.array_equal(phe.phi(0.1, r_out), phi.phi(0.1, r_out))
    r = np.linspace(0.0, 3 * a, 3001)
    # phi ~ r near 0, so |phi_r beta + phi beta'| <= 1 + 2 max(step') for every a
    bound = 1.0 + 2.0 * np.max(smooth_step_deriv(np.linspace(0, 1, 10001)))
    assert np.max(np.abs(phe.phi_r(0.1, r))) <= bound * (1 + 1e-6)


def test_random_family_is_seeded():
    a = random_tensor_family(np.random.default_rng(7), 3, 1.0, 0.5)
    b = random_tensor_family(np.random.default_rng(7), 3, 1.0, 0.5)
    r = np.linspace(0, 1, 30)
    for f, g in zip(a, b):
        assert np.array_equal(f.phi(0.2, r), g.phi(0.2, r))
        assert f.support_bound <= 1.0 and f.time_bound <= 0.5


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_rule_moments(n):
    Y, W = sphere_rule(n, 12)
    assert np.allclose(np.linalg.norm(Y, axis=1), 1.0)
    assert W.sum() == pytest.approx(sphere_area(n), rel=1e-14)
    for j in range(n):
        assert (W * Y[:, j] ** 2).sum() == pytest.approx(sphere_area(n) / n, rel=1e-13)
        assert abs((W * Y[:, j]).sum()) < 1e-14


def test_sphere_area_values():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("n", [2, 3])
def test_radially_symmetric_moment_vanishes(n):
    phi = radial_multid(cutoff(0.5, 1.0), cutoff(0.3, 0.45), n)
    zeta = radial_test_from_multiD(phi, 0, n, 8)
    t = np.linspace(0, 0.5, 6)[:, None]
    r = np.linspace(0, 1.2, 13)[None, :]
    assert np.max(np.abs(zeta.phi(t, r))) < 1e-14
    assert np.max(np.abs(zeta.phi_r(t, r))) < 1e-14


@pytest.mark.parametrize("n", [2, 3])
def test_appendix_example_origin_derivative(n):
    psi = cutoff(1.5, 2.0)
    phi = coordinate_weighted_multid(n - 1, cutoff(0.5, 1.0), psi, n)
    zeta = radial_test_from_multiD(phi, n - 1, n, 16)
    v0, d0 = zeta.origin_trace(np.array([1.0]))
    assert abs(v0[0]) <= 1e-10
    assert d0[0] == pytest.approx(sphere_area(n) / n, abs=1e-8)


def test_gaussian_moment_closed_form():
    gauss = Profile(lambda r: np.exp(-np.asarray(r) ** 2), lambda r: -2 * np.asarray(r) * np.exp(-np.asarray(r) ** 2))
    psi = bump(0.5, 0.5)
    phi = coordinate_weighted_multid(0, gauss, psi, 3)
    zeta = radial_test_from_multiD(phi, 0, 3, 16)
    t = np.linspace(0.05, 0.95, 7)[:, None]
    r = np.linspace(0.0, 3.0, 31)[None, :]
    exact = 4 * math.pi / 3 * r * np.exp(-r * r) * psi(t)
    assert np.max(np.abs(zeta.phi(t, r) - exact)) < 1e-8
    d_exact = 4 * math.pi / 3 * (1 - 2 * r * r) * np.exp(-r * r) * psi(t)
    assert np.max(np.abs(zeta.phi_r(t, r) - d_exact)) < 1e-8
    assert np.max(np.abs(zeta.phi_t(t, r) - 4 * math.pi / 3 * r * np.exp(-r * r) * psi.deriv(t))) < 1e-8


@settings(max_examples=20, deadline=None)
@given(j=st.integers(0, 1), t=st.floats(0.0, 0.5))
def test_moment_vanishes_at_origin_2d(j, t):
    phi = coordinate_weighted_multid(j, cutoff(0.2, 0.7), bump(0.25, 0.25), 2)
    zeta = radial_test_from_multiD(phi, j, 2, 8)
    assert abs(zeta.phi(t, 0.0)) <= 1e-10


def test_unsupported_dimension():
    phi = coordinate_weighted_multid(0, cutoff(0.5, 1.0), cutoff(0.3, 0.45), 4)
    with pytest.raises(DomainError):
        radial_test_from_multiD(phi, 0, 4)
    with pytest.raises(DomainError):
        radial_test_from_multiD(phi, 5, 3)
