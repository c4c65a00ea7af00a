import numpy as np
import pytest

from roughtransport import (ForwardUniquenessViolated, NotApplicable, NotAutonomous,
                            PiecewiseCoefficient, caratheodory_flow, filippov_flow,
                            filippov_flow_map, flow_semigroup_check)
from roughtransport.flows import ExactFlowMap

import oracles

P = PiecewiseCoefficient


def neg_sign_flow(t, x):
    """Closed form ``-(t + x)_- H(-x) + (x - t)_+ H(x)``."""
    if x < 0:
        return -max(-(t + x), 0.0)
    return max(x - t, 0.0)


@pytest.mark.parametrize("t, x, want", [(3.0, 2.0, 0.0), (0.5, 2.0, 1.5), (0.5, -2.0, -1.5),
                                        (1.0, -0.2, 0.0)])
def test_neg_sign_values(neg_sign, t, x, want):
    assert filippov_flow(neg_sign, t, x) == want == neg_sign_flow(t, x)


@pytest.mark.parametrize("t, x, want", [(0.25, -1.0, -0.5), (1.0, -1.0, 0.0), (1.0, 0.7, 0.7)])
def test_two_heaviside_values(two_heaviside, t, x, want):
    assert filippov_flow(two_heaviside, t, x) == want


def test_time_zero_is_identity(neg_sign, two_heaviside):
    for a in (neg_sign, two_heaviside, P.moving_jump(2, -1, 0.5, T=1)):
        for x in (-1.3, 0.0, 0.2):
            assert filippov_flow(a, 0.0, x) == x


def test_increasing_jump_has_no_forward_flow():
    with pytest.raises(ForwardUniquenessViolated):
        filippov_flow(P.step("-1", "1", T=1.0), 0.5, 0.1)


def test_constant_speed_translation():
    fmap = caratheodory_flow(P.constant(0.7), 2.0, np.linspace(-3, 3, 13))
    xs = np.linspace(-2, 2, 9)
    assert np.max(np.abs(fmap(1.5, xs) - (xs + 1.05))) <= 1e-10


def test_tanh_flow_against_closed_form():
    fmap = caratheodory_flow(P.smooth("tanh(x)"), 1.0, np.linspace(-3, 3, 61))
    xs = np.linspace(-2.0, 2.0, 17)
    ref = np.array([oracles.tanh_flow(1.0, x) for x in xs])
    assert np.max(np.abs(fmap(1.0, xs) - ref)) <= 1e-8


def test_linear_field_exponential_flow():
    a = P(["-2", "x", "2"], ["-2", "2"], T=1.0)
    xs = np.linspace(-0.7, 0.7, 15)
    fmap = filippov_flow_map(a, 1.0, np.linspace(-0.8, 0.8, 33))
    assert np.max(np.abs(fmap(1.0, xs) - xs * np.e)) <= 1e-8


def test_caratheodory_needs_continuity(neg_sign):
    with pytest.raises(NotApplicable):
        caratheodory_flow(neg_sign, 1.0, np.linspace(-1, 1, 5))


def test_composition_constant_exact():
    fmap = filippov_flow_map(P.constant(1.0), 2.0, np.linspace(-3, 3, 13))
    assert flow_semigroup_check(fmap, 0.5, 0.75, np.linspace(-3, 3, 61)) == 0.0


def test_composition_neg_sign(neg_sign):
    fmap = filippov_flow_map(neg_sign, 1.0, np.linspace(-3, 3, 61))
    assert isinstance(fmap, ExactFlowMap)
    assert flow_semigroup_check(fmap, 0.5, 0.5, np.linspace(-3, 3, 121)) <= 1e-12


def test_composition_tanh():
    fmap = caratheodory_flow(P.smooth("tanh(x)"), 1.0, np.linspace(-3, 3, 61))
    assert flow_semigroup_check(fmap, 0.25, 0.25, np.linspace(-2, 2, 41)) <= 1e-7


def test_composition_needs_autonomy():
    fmap = filippov_flow_map(P.moving_jump(2, -1, 0.5, T=1.0), 1.0, np.linspace(-1, 1, 5))
    with pytest.raises(NotAutonomous):
        flow_semigroup_check(fmap, 0.25, 0.25, np.linspace(-1, 1, 5))


def test_moving_jump_sliding_window():
    c1, c2, alpha = 2.0, -1.0, 0.5
    fmap = ExactFlowMap(P.moving_jump(c1, c2, alpha, T=2.0), 2.0, np.linspace(-3, 3, 61))
    for t in (0.3, 1.0, 2.0):
        r = t * min(c1 - alpha, alpha - c2)
        xs = np.linspace(-r, r, 41)
        assert np.max(np.abs(fmap(t, xs) - alpha * t)) <= 1e-12
        outside = np.array([-r - 0.5, r + 0.5])
        assert np.all(np.abs(fmap(t, outside) - alpha * t) > 0.1)


def test_filippov_agrees_with_caratheodory_without_jumps():
    a = P.smooth("0.5*sin(x) + 0.2")
    grid = np.linspace(-3, 3, 61)
    num = caratheodory_flow(a, 1.0, grid)
    fil = filippov_flow_map(a, 1.0, grid)
    xs = np.linspace(-2, 2, 21)
    assert np.max(np.abs(num(1.0, xs) - fil(1.0, xs))) <= 1e-8


def test_flow_csv(tmp_path, neg_sign):
    fmap = filippov_flow_map(neg_sign, 1.0, np.linspace(-1, 1, 5))
    fmap.to_csv(tmp_path / "f.csv", [0.0, 1.0])
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "t,x0,chi" and len(lines) == 11
