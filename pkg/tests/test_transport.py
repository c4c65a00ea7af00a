import math

import numpy as np
import pytest

from roughtransport import (ConditionViolated, ForwardUniquenessViolated, MeasureState,
                            NotApplicable, PiecewiseCoefficient, bouchut_james_solve,
                            caratheodory_solve, distribution_distance, make_bump,
                            poupaud_rascle_solve, weak_residual)
from roughtransport.pairing import FunctionOnSupport, default_space_time_family

import oracles

P = PiecewiseCoefficient
TIMES = [0.0, 0.25, 0.5, 1.0]
OWN = [oracles.Bump(c, r) for c in (-1.0, -0.3, 0.0, 0.25, 0.6) for r in (0.25, 1.0)]


def own_pairing_gap(sol, ref, times=TIMES):
    worst = 0.0
    for t in times:
        state = sol.state(t)
        for phi in OWN:
            got, _ = state.pair(FunctionOnSupport(phi, phi.support), tol=1e-12)
            worst = max(worst, abs(got - ref(phi, t)))
    return worst


def test_neg_sign_unit_data(neg_sign, unit_density):
    sol = poupaud_rascle_solve(neg_sign, unit_density, 1.0, TIMES)
    assert own_pairing_gap(sol, oracles.neg_sign_lebesgue) <= 1e-8
    assert sol.state(1.0).atoms == ((0.0, 2.0),)


def test_neg_sign_delta_data(neg_sign):
    sol = poupaud_rascle_solve(neg_sign, MeasureState.dirac(), 1.0, TIMES)
    for t in TIMES:
        assert sol.state(t).atoms == ((0.0, 1.0),) and sol.state(t).panels == ()


def test_two_heaviside_unit_data(two_heaviside, unit_density):
    sol = poupaud_rascle_solve(two_heaviside, unit_density, 1.0, TIMES)
    assert own_pairing_gap(sol, oracles.two_heaviside_lebesgue) <= 1e-8


@pytest.mark.parametrize("c1, c2, alpha", [(2.0, -1.0, 0.5), (1.0, -1.0, 0.0), (3.0, 1.0, 1.5),
                                           (2.0, -1.0, 2.0)])
def test_moving_jump_bump_data(bump_density, c1, c2, alpha):
    sol = poupaud_rascle_solve(P.moving_jump(c1, c2, alpha, T=1.0), bump_density, 1.0, TIMES)
    u0 = lambda x: (1 - x * x) ** 2 if abs(x) < 1 else 0.0
    ref = lambda phi, t: oracles.moving_jump_pushforward(u0, c1, c2, alpha, t, phi)
    assert own_pairing_gap(sol, ref) <= 1e-8
    t = 0.5
    atom = dict(sol.state(t).atoms)[alpha * t]
    assert atom == pytest.approx(oracles.bump_mass(-t * (c1 - alpha), t * (alpha - c2)), abs=1e-13)


def test_initial_state_is_datum(neg_sign, bump_density, family):
    sol = poupaud_rascle_solve(neg_sign, bump_density, 1.0, TIMES)
    assert sol.state(0.0) == bump_density.at(0.0)


def test_mass_conserved_exact_path(bump_density):
    sol = poupaud_rascle_solve(P.moving_jump(2.0, -1.0, 0.5, T=1.0), bump_density, 1.0)
    m0 = bump_density.mass()
    assert max(abs(sol.state(t).mass() - m0) for t in np.linspace(0, 1, 9)) <= 1e-10


def test_increasing_jump_refused(unit_density):
    with pytest.raises(ForwardUniquenessViolated):
        poupaud_rascle_solve(P.step("-1", "1", T=1.0), unit_density, 1.0)


def test_caratheodory_translation_of_atom():
    sol = caratheodory_solve(P.constant(0.5), None, MeasureState.dirac(), 1.0)
    phi = make_bump(0.3, 1.0)
    assert sol.state(1.0).pair(phi)[0] == pytest.approx(float(phi(0.5)), abs=1e-12)


def test_caratheodory_zeroth_order_weight():
    b0 = 0.3
    sol = caratheodory_solve(P.constant(0.0), P.constant(b0), MeasureState.dirac(), 1.0)
    phi = make_bump(0.0, 1.0)
    for t in (0.0, 0.5, 1.0):
        assert sol.state(t).pair(phi)[0] == pytest.approx(math.exp(-b0 * t) * float(phi(0.0)),
                                                          abs=1e-12)


def test_caratheodory_tanh_against_characteristics(bump_density):
    sol = caratheodory_solve(P.smooth("tanh(x)"), None, bump_density, 1.0)

    def ref(phi, t):
        u0 = lambda x: (1 - x * x) ** 2
        return oracles.quad(lambda x: u0(x) * phi.scalar(oracles.tanh_flow(t, x)), -1.0, 1.0)

    assert own_pairing_gap(sol, ref, [0.0, 0.5, 1.0]) <= 1e-7


def test_caratheodory_refuses_jumps(neg_sign, unit_density):
    with pytest.raises(NotApplicable):
        caratheodory_solve(neg_sign, None, unit_density, 1.0)


def test_concepts_agree_for_continuous_coefficient(bump_density, family):
    a = P.smooth("0.5*tanh(x) + 0.2")
    times = [0.0, 0.5, 1.0]
    pr = poupaud_rascle_solve(a, bump_density, 1.0, times)
    car = caratheodory_solve(a, None, bump_density, 1.0, times)
    assert distribution_distance(pr, car, family, times) <= 1e-8


def test_bouchut_james_moving_jump(unit_density):
    c1, c2, alpha = 2.0, -1.0, 0.5
    sol = bouchut_james_solve(P.moving_jump(c1, c2, alpha, prescribed=repr(alpha), T=1.0),
                              unit_density, 1.0, TIMES)
    for t in TIMES[1:]:
        [(x, w)] = sol.state(t).atoms
        assert x == pytest.approx(alpha * t, abs=1e-15)
        assert w == pytest.approx(t * (c1 - c2), abs=1e-13)
    assert weak_residual(sol, "conservative", "diamond").max_abs() <= 1e-8


def test_bouchut_james_heaviside(unit_density):
    sol = bouchut_james_solve(P.step("1", "0", prescribed={0: "0"}, T=1.0), unit_density, 1.0)
    assert sol.state(1.0).atoms == ((0.0, 1.0),)
    assert weak_residual(sol, "conservative", "diamond").max_abs() <= 1e-8
    assert weak_residual(sol, "conservative", "model").max_abs() > 1e-2


def test_bouchut_james_rejects_off_slope_value(unit_density):
    with pytest.raises(ConditionViolated) as info:
        bouchut_james_solve(P.moving_jump(2.0, -1.0, 0.5, prescribed="0.6", T=1.0),
                            unit_density, 1.0)
    assert info.value.condition == "v"


def test_model_residual_vanishes_only_at_mean(unit_density):
    for alpha, small in ((0.5, True), (1.25, False)):
        sol = bouchut_james_solve(P.moving_jump(2.0, -1.0, alpha, prescribed=repr(alpha), T=1.0),
                                  unit_density, 1.0)
        worst = weak_residual(sol, "conservative", "model").max_abs()
        assert (worst <= 1e-8) is small


def test_model_residual_matches_closed_form(unit_density):
    c1, c2, alpha = 2.0, -1.0, 1.25
    sol = bouchut_james_solve(P.moving_jump(c1, c2, alpha, prescribed=repr(alpha), T=1.0),
                              unit_density, 1.0)
    table = weak_residual(sol, "conservative", "model")
    family = default_space_time_family(1.0)
    for phi, row in list(zip(family, table.rows))[::7]:
        tau = oracles.Bump(phi.time.center, phi.time.radius)
        psi = oracles.Bump(phi.space.center, phi.space.radius)
        ref = oracles.bj_model_residual(c1, c2, alpha, alpha, tau, psi)
        assert abs(abs(row.value) - ref) <= 1e-8


def test_flow_product_residual(neg_sign, unit_density):
    sol = poupaud_rascle_solve(neg_sign, unit_density, 1.0)
    assert weak_residual(sol, "conservative", "pr").max_abs() <= 1e-8


def test_solution_json_roundtrip(neg_sign, unit_density):
    sol = poupaud_rascle_solve(neg_sign, unit_density, 1.0, [0.0, 1.0])
    data = sol.to_json([1.0])
    assert data["provenance"] == "poupaud-rascle"
    assert data["states"][0]["atoms"] == [[0.0, 2.0]]


def test_time_lipschitz_pairings(neg_sign, unit_density, family):
    sol = poupaud_rascle_solve(neg_sign, unit_density, 1.0)
    ts = np.linspace(0, 1, 11)
    vals = np.array([[sol.state(t).pair(phi)[0] for phi in family] for t in ts])
    slopes = np.abs(np.diff(vals, axis=0)) / np.diff(ts)[:, None]
    bound = np.array([2.0 * float(phi(0.0)) for phi in family])
    assert np.all(slopes <= bound + 1e-9)
