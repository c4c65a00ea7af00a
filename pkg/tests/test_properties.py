"""Invariants as property tests, plus a sweep of the builtin scenario registry."""

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from roughtransport import (ForwardUniquenessViolated, MeasureState, NotApplicable,
                            PiecewiseCoefficient, build_context, diamond_product,
                            filippov_flow_map, flow_semigroup_check, make_bump, mollify,
                            poupaud_rascle_solve, semigroup_apply)
from roughtransport.colombeau import smoothing_width
from roughtransport.energy import probe_norm, probe_value
from roughtransport.measures import DensityPanel
from roughtransport.profiles import DEFAULT_PROFILES
from roughtransport.scenarios import BUILTIN_IDS, builtin
from roughtransport.semigroup import Indicator

P = PiecewiseCoefficient
GRID = np.linspace(-3.0, 3.0, 241)

speeds = st.floats(-2.0, 2.0, allow_nan=False).map(lambda v: round(v, 3))
centres = st.floats(-2.0, 2.0, allow_nan=False)
radii = st.floats(0.05, 1.5, allow_nan=False)
weights = st.floats(-3.0, 3.0, allow_nan=False)
epsilons = st.floats(1e-6, 0.5, allow_nan=False)


@st.composite
def converging_steps(draw):
    """Piecewise constant speeds with one straight curve; left speed >= right speed."""
    hi, lo = sorted((draw(speeds), draw(speeds)), reverse=True)
    x0 = draw(st.floats(-1.0, 1.0))
    slope = round(lo + draw(st.floats(0.0, 1.0)) * (hi - lo), 3) if draw(st.booleans()) else 0.0
    assume(lo <= slope <= hi)
    return P([repr(hi), repr(lo)], [f"{x0!r} + {slope!r}*t"], T=2.0)


@st.composite
def states(draw):
    """A few atoms and a bump density on a finite window."""
    atoms = draw(st.lists(st.tuples(centres, weights), max_size=3))
    c, r = draw(centres), draw(radii)
    dens = MeasureState.density(f"(1 - ((x - {c!r})/{r!r})**2)**2", c - r, c + r)
    return MeasureState(0.0, tuple(atoms), dens.panels)


# -- flows --------------------------------------------------------------------------------

@given(converging_steps(), st.floats(0.0, 2.0))
def test_flow_is_monotone(coeff, t):
    fmap = filippov_flow_map(coeff, 2.0, GRID)
    chi = np.asarray(fmap(t, GRID))
    assert np.all(np.diff(chi) >= -1e-12)


@given(converging_steps(), st.floats(0.0, 2.0), centres)
def test_flow_speed_bound(coeff, t, x):
    fmap = filippov_flow_map(coeff, 2.0, GRID)
    assert abs(float(fmap(t, np.array([x]))[0]) - x) <= t * coeff.envelope() + 1e-12


@given(speeds, speeds, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_flow_composition(left, right, r, s):
    assume(left >= right)
    fmap = filippov_flow_map(P.step(repr(left), repr(right), T=2.0), 2.0, GRID)
    assert flow_semigroup_check(fmap, r, s, GRID) <= 1e-9


# -- pairings -----------------------------------------------------------------------------

@given(states(), states(), weights, weights, centres, radii)
def test_pairing_linear(u, v, a, b, c, r):
    phi = make_bump(c, r)
    lhs = (u.scaled(a) + v.scaled(b)).pair(phi)[0]
    rhs = a * u.pair(phi)[0] + b * v.pair(phi)[0]
    assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(a) + abs(b)) * (1.0 + abs(rhs))


@given(states(), st.floats(0.01, 0.99), centres, radii)
def test_pairing_split_invariant(u, frac, c, r):
    p = u.panels[0]
    point = p.lo + frac * (p.hi - p.lo)
    phi = make_bump(c, r)
    assert abs(u.split_panel(0, point).pair(phi)[0] - u.pair(phi)[0]) <= 1e-12


@given(centres, radii)
def test_bump_identities(c, r):
    phi = make_bump(c, r)
    mass = integrate.quad(phi, c - r, c + r, points=[c], epsabs=1e-13, epsrel=1e-13)[0]
    assert abs(mass - 1.0) <= 1e-9
    assert phi(c + r) == 0.0 and phi(c - r) == 0.0
    assert abs(phi(c + 0.3 * r) - phi(c - 0.3 * r)) <= 1e-12 * phi(c)


# -- transport ----------------------------------------------------------------------------

@given(converging_steps(), states(), st.floats(0.0, 2.0))
def test_mass_conserved(coeff, u0, t):
    sol = poupaud_rascle_solve(coeff, u0, 2.0)
    assert abs(sol.state(t).mass() - u0.mass()) <= 1e-10 * (1.0 + abs(u0.mass()))


# -- products -----------------------------------------------------------------------------

@given(states(), states(), weights, weights, centres)
def test_diamond_bilinear(u, v, a, b, c):
    coeff = P.step("1", "-1", prescribed={0: "0"}, T=2.0)
    phi = make_bump(c, 0.7)
    lhs = diamond_product(coeff, u.scaled(a) + v.scaled(b)).pair(phi)[0]
    rhs = a * diamond_product(coeff, u).pair(phi)[0] + b * diamond_product(coeff, v).pair(phi)[0]
    assert abs(lhs - rhs) <= 1e-9 * (1.0 + abs(a) + abs(b))


# -- mollifiers ---------------------------------------------------------------------------

@pytest.mark.parametrize("profile", DEFAULT_PROFILES, ids=lambda p: type(p).__name__)
def test_profile_has_unit_mass(profile):
    mass = integrate.quad(profile, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)[0]
    assert abs(mass - 1.0) <= 1e-10
    assert profile.cdf(-1.0) == 0.0 and abs(profile.cdf(1.0) - 1.0) <= 1e-12


@given(speeds, speeds, epsilons, st.floats(0.05, 3.0))
def test_mollified_step_keeps_piece_values(left, right, eps, gap):
    coeff = P.step(repr(left), repr(right), T=1.0)
    w = smoothing_width(eps)
    for x, want in ((-w - gap, left), (w + gap, right)):
        assert abs(mollify(coeff, eps).derivative(0.0, x) - want) <= 1e-12


@given(epsilons, st.floats(-2.0, 2.0))
def test_mollified_affine_is_exact(eps, x):
    m = mollify(P.smooth("0.5*x - 1", derivatives=["0.5"]), eps)
    assert abs(m.derivative(0.0, x) - (0.5 * x - 1.0)) <= 1e-9
    assert abs(m.derivative(0.0, x, 1) - 0.5) <= 1e-8


# -- energy -------------------------------------------------------------------------------

@given(st.floats(1e-4, 0.5))
def test_probe_unit_norm(eps):
    assert abs(probe_norm(eps) - 1.0) <= 1e-10


@given(st.floats(-1.0, 1.0), st.floats(0.2, 5.0), st.floats(1e-4, 0.5))
def test_probe_bounded_for_smooth_coefficient(amp, k, eps):
    a = lambda x: 1.0 + amp * np.sin(k * np.asarray(x) + 0.3)
    assert abs(probe_value(a, eps)) <= 0.5 * abs(amp) * k + 1e-8


# -- semigroup ----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def step_ctx():
    return build_context(P.step("1", "2", bounds=(1.0, 2.0)))


@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.floats(-1.5, 0.5), st.floats(0.1, 1.5))
def test_semigroup_composition(step_ctx, s, t, lo, length):
    f = Indicator(lo, lo + length)
    xs = np.linspace(-1.0, 12.0, 131)
    back = step_ctx.A(xs) - s - t
    edges = step_ctx.A(np.array([f.lo, f.hi]))
    keep = np.min(np.abs(back[:, None] - edges[None, :]), axis=1) > 1e-7
    lhs = semigroup_apply(step_ctx, s, semigroup_apply(step_ctx, t, f))(xs)
    rhs = semigroup_apply(step_ctx, s + t, f)(xs)
    assert np.max(np.abs(lhs - rhs)[keep], initial=0.0) <= 1e-9


@given(st.floats(0.0, 5.0), st.floats(-1.5, 0.5), st.floats(0.1, 1.5))
def test_semigroup_norm_bound(step_ctx, t, lo, length):
    f = Indicator(lo, lo + length)
    bound = math.sqrt(step_ctx.c1 / step_ctx.c0) * step_ctx.norm(f)
    assert step_ctx.norm(semigroup_apply(step_ctx, t, f)) <= bound + 1e-9


# -- registry sweep -----------------------------------------------------------------------

def _registry_objects(sid):
    """Distinct one-dimensional coefficients and data used by a builtin scenario."""
    sc = builtin(sid)
    coeffs, data = {}, {}
    for stage in sc.stages:
        if stage["kind"] != "garding":
            c = sc.stage_coefficient(stage)
            if isinstance(c, PiecewiseCoefficient):
                coeffs.setdefault(repr(stage.get("coefficient", sc.coefficient))
                                  + repr(sc.stage_params(stage)), c)
        data.setdefault(repr(stage.get("u0", sc.u0)), sc.stage_datum(stage))
    return sc, list(coeffs.values()), list(data.values())


def _finite(u):
    return all(math.isfinite(p.lo) and math.isfinite(p.hi) for p in u.panels)


REGISTRY_COUNTS = {}


@pytest.mark.parametrize("sid", BUILTIN_IDS)
def test_registry_properties(sid):
    sc, coeffs, data = _registry_objects(sid)
    done = REGISTRY_COUNTS.setdefault(sid, set())
    T = min(sc.T, 2.0)
    for coeff in coeffs:
        # flow monotonicity, and composition where the coefficient is autonomous
        try:
            fmap = filippov_flow_map(coeff, T, GRID)
        except (ForwardUniquenessViolated, NotApplicable):
            fmap = None
        if fmap is not None:
            for t in np.linspace(0.0, T, 5):
                assert np.all(np.diff(np.asarray(fmap(t, GRID))) >= -1e-12)
            done.add("monotone")
            if coeff.is_autonomous and coeff.is_piecewise_constant:
                assert flow_semigroup_check(fmap, 0.3 * T, 0.6 * T, GRID) <= 1e-9
                done.add("composition")
        # mollifier normalization: piece values survive away from every curve
        if coeff.is_piecewise_constant:
            eps = 2.0 ** -20
            m = mollify(coeff, eps)
            w = smoothing_width(eps)
            cuts = coeff.curve_positions(0.0)
            for x in np.linspace(-3.0, 3.0, 61):
                if all(abs(x - c) > w for c in cuts):
                    assert abs(m.derivative(0.0, x) - coeff(0.0, x)) <= 1e-12
            done.add("normalization")
        # mass conservation of the pushforward on the exact path
        for u0 in data:
            if fmap is not None and coeff.is_piecewise_constant and coeff.has_affine_curves \
                    and _finite(u0):
                sol = poupaud_rascle_solve(coeff, u0, T)
                for t in (0.0, 0.5 * T, T):
                    assert abs(sol.state(t).mass() - u0.mass()) <= 1e-10
                done.add("mass")
    # pairing linearity and split invariance of every datum
    probe = MeasureState.dirac(0.25, 1.5) + MeasureState.density("1 + x", -1.0, 1.0)
    for u0 in data:
        for phi in (make_bump(0.0, 0.5), make_bump(1.0, 1.0)):
            lhs = (u0.scaled(2.0) - probe).pair(phi)[0]
            assert abs(lhs - (2.0 * u0.pair(phi)[0] - probe.pair(phi)[0])) <= 1e-10
            if u0.panels:
                p = u0.panels[0]
                lo = p.lo if math.isfinite(p.lo) else -5.0
                hi = p.hi if math.isfinite(p.hi) else 5.0
                split = u0.split_panel(0, 0.5 * (lo + hi) + 0.123)
                assert abs(split.pair(phi)[0] - u0.pair(phi)[0]) <= 1e-12
        done.add("linearity")
    assert "linearity" in done


def test_registry_sweep_covers_every_property():
    if len(REGISTRY_COUNTS) < len(BUILTIN_IDS):
        pytest.skip("registry sweep not run in this session")
    seen = set().union(*REGISTRY_COUNTS.values())
    assert {"monotone", "composition", "normalization", "mass", "linearity"} <= seen
