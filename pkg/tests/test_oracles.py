"""Frozen and closed-form oracle values against independent quadrature."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import beta

import oracles


def _poly_rho(k=4):
    K = 1.0 / math.sqrt(beta(0.5, 2 * k + 1))
    rho = lambda z: K * (1 - z * z) ** k
    drho = lambda z: -2 * k * K * z * (1 - z * z) ** (k - 1)
    return rho, drho


def test_poly_profile_unit_l2():
    rho, _ = _poly_rho()
    assert oracles.quad(lambda z: rho(z) ** 2, -1.0, 1.0) == pytest.approx(1.0, abs=1e-13)


def test_holder_constant_by_quadrature():
    rho, drho = _poly_rho()
    direct = oracles.quad(lambda z: z ** 0.75 * drho(z) * rho(z), 0.0, 1.0)
    assert oracles.holder_probe_constant(0.75) == pytest.approx(direct, abs=1e-12)
    assert oracles.holder_probe_constant(0.75) == pytest.approx(-0.3297497121161407, abs=1e-15)


def test_frozen_holder_values():
    c = oracles.holder_probe_constant(0.75)
    want = [c * e ** -0.25 for e in oracles.HOLDER_LADDER]
    assert np.allclose(oracles.HOLDER_PROBE_VALUES, want, rtol=1e-15, atol=0)


def test_lipschitz_probe_value():
    # a = 1 + min(x_+, 1): for eps <= 1 the probe is int_0^1 z rho' rho dz
    rho, drho = _poly_rho()
    direct = oracles.quad(lambda z: z * drho(z) * rho(z), 0.0, 1.0)
    assert direct == pytest.approx(oracles.LIPSCHITZ_PROBE_VALUE, abs=1e-14)


def test_bump_normalization_and_derivative():
    phi = oracles.Bump(0.3, 0.7)
    assert oracles.integral(phi) == pytest.approx(1.0, abs=1e-12)
    h = 1e-6
    for x in (0.0, 0.5, 0.8):
        fd = (phi.scalar(x + h) - phi.scalar(x - h)) / (2 * h)
        assert phi.dscalar(x) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_bump_mass_closed_form():
    for lo, hi in ((-2.0, 2.0), (-0.3, 0.6), (0.5, 3.0)):
        direct = integrate.quad(lambda x: (1 - x * x) ** 2, max(lo, -1), min(hi, 1))[0]
        assert oracles.bump_mass(lo, hi) == pytest.approx(direct, abs=1e-14)
    assert oracles.bump_mass(-1, 1) == pytest.approx(16.0 / 15.0, abs=1e-15)


def test_bump_l2_norm():
    direct = math.sqrt(integrate.quad(lambda x: (1 - x * x) ** 4, -1, 1)[0])
    assert oracles.BUMP_L2_NORM == pytest.approx(direct, abs=1e-14)


def test_tanh_flow_solves_ode():
    for x in (-0.8, 0.1, 0.9):
        sol = integrate.solve_ivp(lambda t, y: np.tanh(y), (0.0, 1.5), [x], rtol=1e-12, atol=1e-12)
        assert oracles.tanh_flow(1.5, x) == pytest.approx(sol.y[0, -1], abs=1e-9)
    assert oracles.tanh_norm(0.0) == pytest.approx(oracles.BUMP_L2_NORM, abs=1e-13)


def test_step_travel_time_is_inverse_speed_integral():
    for x in (-2.0, 0.7, 3.0):
        direct = math.copysign(oracles.quad(lambda y: 1.0 / (1.0 + (y > 0)), min(0, x), max(0, x),
                                            [0.0]), x)
        assert oracles.step_travel_time(x) == pytest.approx(direct, abs=1e-13)
        assert oracles.step_travel_inverse(oracles.step_travel_time(x)) == pytest.approx(x)


def test_unit_speed_resolvent_closed_form():
    f = lambda y: 1.0 if 0.0 <= y <= 1.0 else 0.0
    for x in (0.5, 1.0, 2.0):
        direct = oracles.quad(lambda z: math.exp(-z) * f(x - z), 0.0, 40.0, [x - 1.0, x])
        assert oracles.unit_speed_indicator_resolvent(x) == pytest.approx(direct, abs=1e-12)
    k1 = oracles.unit_speed_power_norm(f, 1, (0.0, 1.0))
    closed = math.sqrt(oracles.quad(lambda x: oracles.unit_speed_indicator_resolvent(x) ** 2,
                                    0.0, 51.0, [1.0]))
    assert k1 == pytest.approx(closed, abs=1e-10)


def test_heaviside_delta_is_half_point_value():
    phi = oracles.Bump(0.2, 0.5)
    assert oracles.heaviside_delta(phi) == 0.5 * phi.scalar(0.0)


def test_log_probe_finite_and_negative():
    vals = [oracles.log_probe_value(2.0 ** -j) for j in (3, 6, 9)]
    assert all(v < 0 for v in vals) and vals[0] > vals[1] > vals[2]
