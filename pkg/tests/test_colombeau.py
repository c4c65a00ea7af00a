import math

import numpy as np
import pytest

from roughtransport import (MeasureState, NoConvergence, PiecewiseCoefficient, coefficient_net,
                            default_family, make_bump, moderateness_exponent, mollify,
                            regularized_pairings, shadow, solve_regularized)
from roughtransport.colombeau import (DEFAULT_LADDER, NetPairings, function_net, growth_fit,
                                      smoothing_width)
from roughtransport.pairing import FunctionOnSupport
from roughtransport.profiles import EXP_BUMP, POLY_BUMP
from roughtransport.transport import closed_form

import oracles

P = PiecewiseCoefficient
H_NEG = P.step("1", "0", T=1.0)


def test_log_and_power_widths():
    assert smoothing_width(2.0 ** -6, "log") == pytest.approx(1.0 / (6.0 * math.log(2.0)))
    assert smoothing_width(0.01, "power") == 0.01
    with pytest.raises(ValueError):
        smoothing_width(1.5)


def test_mollified_heaviside_values():
    m = mollify(H_NEG, 2.0 ** -6)
    assert m(0.0, -1.0) == 1.0 and m(0.0, 1.0) == 0.0
    assert m(0.0, 0.0) == pytest.approx(0.5, abs=1e-14)


def test_mollified_heaviside_derivative_is_log_sized():
    for e in (2.0 ** -8, 2.0 ** -32):
        m = mollify(H_NEG, e)
        sup = max(abs(m.derivative(0.0, x, 1)) for x in np.linspace(-0.2, 0.2, 2001))
        assert sup == pytest.approx(EXP_BUMP.peak * math.log(1.0 / e), rel=1e-6)


def test_smooth_coefficient_converges_quadratically():
    a = P.smooth("sin(x)")
    xs = np.linspace(-2, 2, 41)
    errs = []
    for e in (2.0 ** -4, 2.0 ** -5, 2.0 ** -6):
        m = mollify(a, e, "power")
        errs.append(np.max(np.abs(m.derivative(0.0, xs) - np.sin(xs))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


def test_quadrature_mollification_matches_closed_form():
    e = 2.0 ** -5
    closed = mollify(P.step("2", "-1", T=1.0), e, "power")
    generic = mollify(P(["2 + 0*x", "-1 + 0*x"], ["0"], T=1.0), e, "power")
    xs = np.linspace(-0.05, 0.05, 101)
    for order in (0, 1, 2):
        scale = e ** -order
        assert np.max(np.abs(closed.derivative(0.0, xs, order) - generic.derivative(0.0, xs, order))) \
            <= 1e-8 * scale


def test_power_scale_exponent_is_one():
    net = coefficient_net(H_NEG, scale="power")
    assert moderateness_exponent(net, 1).exponent == pytest.approx(1.0, abs=0.1)


def test_log_scale_is_log_type_with_flat_power_fit():
    fit = moderateness_exponent(coefficient_net(H_NEG, scale="log"), 1)
    assert fit.log_type and fit.log_residual <= 0.05
    assert abs(fit.exponent) < 0.5


def test_fixed_net_has_zero_exponent():
    net = function_net(lambda e, t, x, k: np.sin(x + k) + 0 * t)
    for order in range(3):
        assert abs(moderateness_exponent(net, order).exponent) <= 1e-12


def test_profiles_differ_negligibly_for_smooth_coefficient():
    a = P.smooth("cos(x)")
    kw = {"scale": "power", "n_times": 1, "level": 7}
    d = coefficient_net(a, profile=EXP_BUMP, **kw) - coefficient_net(a, profile=POLY_BUMP, **kw)
    assert moderateness_exponent(d, 0).exponent <= 0.0


def test_growth_fit_needs_four_rungs():
    with pytest.raises(ValueError):
        growth_fit([0.1, 0.01, 0.001], [1, 2, 3])


def test_net_csv(tmp_path):
    net = coefficient_net(H_NEG, ladder=DEFAULT_LADDER[:4], level=6)
    net.to_csv(tmp_path / "n.csv")
    lines = (tmp_path / "n.csv").read_text().splitlines()
    assert lines[0] == "eps,alpha,sup_norm,window" and len(lines) == 13


def test_regularized_smooth_solution_is_classical():
    sol = solve_regularized(P.smooth("tanh(x)"), MeasureState.density("(1-x**2)**2", -1, 1), 1.0)
    for c, r in ((0.0, 1.0), (0.8, 0.25), (-1.2, 1.0)):
        phi = oracles.Bump(c, r)
        ref = oracles.quad(lambda x: (1 - x * x) ** 2 * phi.scalar(oracles.tanh_flow(1.0, x)),
                           -1.0, 1.0)
        got, _ = sol.state(1.0).pair(FunctionOnSupport(phi, phi.support))
        assert abs(got - ref) <= 1e-8


def test_regularized_time_zero_is_datum(family):
    u0 = MeasureState.density("(1-x**2)**2", -1, 1)
    sol = solve_regularized(mollify(H_NEG, 2.0 ** -6), u0, 1.0)
    got = sol.pairing_matrix(family, [0.0])[0][0]
    want = np.array([u0.pair(phi)[0] for phi in family])
    assert np.max(np.abs(got - want)) == 0.0


def test_regularized_trajectories_are_c_bounded():
    m = mollify(H_NEG, 2.0 ** -6)
    sol = solve_regularized(m, MeasureState.lebesgue(), 1.0)
    x0 = np.linspace(-2.0, 2.0, 41)
    traj, _ = sol.trajectories(x0, [0.0, 0.5, 1.0])
    assert np.all(np.abs(traj) <= np.abs(x0)[None, :] + 1.0 * 1.0 + 1e-9)


def test_regularized_pile_up_against_fine_integration():
    from scipy.integrate import solve_ivp

    m = mollify(H_NEG, 2.0 ** -6)
    sol = solve_regularized(m, MeasureState.lebesgue(), 1.0)
    x0 = np.array([-0.9, -0.3, -0.05, 0.02, 0.4])
    got = sol.trajectories(x0, [1.0])[0][-1]
    for x, g in zip(x0, got):
        ref = solve_ivp(lambda t, y: [m(t, y[0])], (0.0, 1.0), [x], rtol=1e-13, atol=1e-14,
                        method="DOP853").y[0, -1]
        assert abs(g - ref) <= 1e-8


def _candidate_net(cand, family, times, ladder):
    vals = np.array([[[cand(t).pair(phi)[0] for phi in family] for t in times] for _ in ladder])
    return NetPairings(tuple(ladder), tuple(times), vals, "log")


def test_shadow_idempotent(family):
    cand = lambda t: MeasureState(t, ((0.0, t),), MeasureState.lebesgue().panels)
    times = [0.5, 1.0]
    net = _candidate_net(cand, family, times, DEFAULT_LADDER[:5])
    out = shadow(net, family, {"1+t*delta": closed_form(cand, 1.0), "1": closed_form(
        lambda t: MeasureState.lebesgue(t=t), 1.0)})
    assert out.identified == "1+t*delta" and out.distances["1+t*delta"] <= 1e-12


def test_shadow_rejects_non_cauchy(family):
    vals = np.array([[[(-1.0) ** i * 10.0 * i] * len(family)] for i in range(5)])
    with pytest.raises(NoConvergence):
        shadow(NetPairings(DEFAULT_LADDER[:5], (1.0,), vals, "log"), family)


def test_smooth_coefficient_shadow_is_classical():
    fam = [make_bump(c, 1.0) for c in (-1.0, 0.0, 1.0)]
    a = P.smooth("0.5*tanh(x)")
    u0 = MeasureState.density("(1-x**2)**2", -1, 1)
    net = regularized_pairings(a, u0, 1.0, fam, [1.0], DEFAULT_LADDER[:4], "power",
                               profile=POLY_BUMP)
    out = shadow(net, fam, {"classical": solve_regularized(a, u0, 1.0)})
    assert out.identified == "classical"
