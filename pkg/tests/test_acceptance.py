"""The ten acceptance criteria at their stated tolerances, one PASS/FAIL line each."""

import numpy as np

from roughtransport import (MeasureState, PiecewiseCoefficient, diamond_product, energy_check,
                            garding_probe, model_product, poupaud_rascle_solve)
from roughtransport.cli import theory_matrices
from roughtransport.energy import holder_coefficient, lipschitz_control
from roughtransport.pairing import FunctionOnSupport, make_bump
from roughtransport.products import NOT_EXISTS
from roughtransport.scenarios import BUILTIN_IDS

import oracles
import test_properties
from conftest import ACCEPTANCE

P = PiecewiseCoefficient
TIMES = (0.0, 0.25, 0.5, 1.0)
OWN = [oracles.Bump(c, r) for c in (-1.0, -0.3, 0.0, 0.25, 0.6) for r in (0.25, 1.0)]
BUMP = MeasureState.density("(1-x**2)**2", -1.0, 1.0)


def _measured(report, stage, name):
    for s in report.stages:
        if s.name == stage:
            for c in s.checks:
                if c.name == name:
                    return c.measured
    raise KeyError((report.scenario, stage, name))


def _record(n, title, items):
    """``items``: ``(label, measured, op, bound)`` with op one of ``<=``, ``>=``, ``==``."""
    ops = {"<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b, "==": lambda a, b: a == b}
    failed = [i for i in items if not ops[i[2]](i[1], i[3])]
    numeric = [i for i in items if i[2] == "<=" and isinstance(i[1], float) and i[3] > 0]
    tightest = max(numeric, key=lambda i: i[1] / i[3]) if numeric else items[0]
    worst = failed[0] if failed else tightest
    label, val, op, bound = worst
    shown = f"{val:.3g}" if isinstance(val, float) else repr(val)
    line = (f"{'PASS' if not failed else 'FAIL'}  {n:>2}. {title}: "
            f"{len(items) - len(failed)}/{len(items)} checks ({label} {shown} {op} {bound!r})")
    ACCEPTANCE[n] = line
    print(line)
    assert not failed, failed


def _oracle_gap(sol, ref):
    worst = 0.0
    for t in TIMES:
        state = sol.state(t)
        for phi in OWN:
            got, _ = state.pair(FunctionOnSupport(phi, phi.support), tol=1e-12)
            worst = max(worst, abs(got - ref(phi, t)))
    return worst


def test_1_flow_solution_closed_forms(registry, neg_sign, two_heaviside, unit_density):
    items = [(f"{sid} distance", _measured(registry[sid], "pushforward", name), "<=", 1e-8)
             for sid, name in (("pr-neg-sign", "distance to 1+2t*delta"),
                               ("pr-delta-data", "distance to delta"),
                               ("pr-2H", "distance to 1+2t*delta"),
                               ("pr-moving-jump", "distance to closed-form"))]
    sol = poupaud_rascle_solve(neg_sign, unit_density, 1.0)
    items.append(("-sign oracle gap", _oracle_gap(sol, oracles.neg_sign_lebesgue), "<=", 1e-8))
    sol = poupaud_rascle_solve(neg_sign, MeasureState.dirac(), 1.0)
    items.append(("delta stays", max(abs(sol.state(t).atoms[0][1] - 1.0) for t in TIMES), "<=", 1e-8))
    sol = poupaud_rascle_solve(two_heaviside, unit_density, 1.0)
    items.append(("2H oracle gap", _oracle_gap(sol, oracles.two_heaviside_lebesgue), "<=", 1e-8))
    u0 = lambda x: (1 - x * x) ** 2 if abs(x) < 1 else 0.0
    sol = poupaud_rascle_solve(P.moving_jump(2.0, -1.0, 0.5, T=1.0), BUMP, 1.0)
    ref = lambda phi, t: oracles.moving_jump_pushforward(u0, 2.0, -1.0, 0.5, t, phi)
    items.append(("moving-jump oracle gap", _oracle_gap(sol, ref), "<=", 1e-8))
    _record(1, "flow solutions match closed forms", items)


def test_2_flow_products(registry):
    items = [(f"{sid} product distance", _measured(registry[sid], "flow-product", name), "<=", 1e-6)
             for sid, name in (("pr-neg-sign", "distance to -sign"),
                               ("pr-delta-data", "distance to 0"),
                               ("pr-2H", "distance to 2H(-x)"))]
    _record(2, "flow products match closed forms", items)


def test_3_model_products(registry):
    out = model_product(MeasureState.density("1", lo=0.0), MeasureState.dirac())
    fam = [make_bump(c, r) for c in (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0) for r in (0.25, 1.0)]
    want = np.array([oracles.heaviside_delta(oracles.Bump(p.center, p.radius)) for p in fam])
    dd = model_product(MeasureState.dirac(), MeasureState.dirac())
    _record(3, "model products H.delta and delta.delta", [
        ("H.delta status", out.status, "==", "defined"),
        ("H.delta gap to phi(0)/2", float(np.max(np.abs(out.value.values() - want))), "<=", 1e-4),
        ("registry H.delta distance", _measured(registry["model-products"], "H-delta",
                                                "distance to delta/2"), "<=", 1e-4),
        ("delta.delta status", dd.status, "==", NOT_EXISTS),
        ("delta.delta growth slope", float(dd.diagnostics["growth_slope"]), ">=", 0.9),
    ])


def test_4_prescribed_value_solutions(registry):
    rep = registry["bj-moving-jump"]
    coeff = P.moving_jump(2.0, -1.0, 0.5, prescribed="0.5", T=1.0)
    on_curve = diamond_product(coeff, MeasureState.dirac(0.25, 1.0, t=0.5))
    _record(4, "prescribed-value solutions and residuals", [
        ("solution distance", _measured(rep, "solution", "distance to 1+t(c1-c2)*delta"), "<=", 1e-8),
        ("diamond residual", _measured(rep, "diamond-residual", "max residual"), "<=", 1e-8),
        ("model residual at the mean", _measured(rep, "model-residual", "max residual"), "<=", 1e-8),
        ("model residual off the mean", _measured(rep, "model-residual-off-centre", "max residual"),
         ">=", 1e-8),
        ("fail margin ratio", _measured(rep, "model-residual-off-centre",
                                        "fail margin / ((c1-c2) scale)"), ">=", 0.1),
        ("a <> delta atoms", on_curve.atoms, "==", ((0.25, 0.5),)),
        ("a <> delta panels", on_curve.panels, "==", ()),
    ])


def test_5_log_scale_shadow(registry):
    rep = registry["lo-heaviside-shadow"]
    _record(5, "log-scale shadow and growth", [
        ("identified", _measured(rep, "shadow", "identified"), "==", "1+t*delta"),
        ("shadow distance", _measured(rep, "shadow", "distance to 1+t*delta"), "<=", 1e-3),
        ("log fit residual", _measured(rep, "log-scale-growth", "log fit residual"), "<=", 0.05),
        ("power-scale slope", _measured(rep, "power-scale-growth", "power slope"), ">=", 0.5),
        ("power-scale log residual", _measured(rep, "power-scale-growth", "log fit residual"),
         ">=", 0.05),
    ])


def test_6_garding_probe():
    holder = garding_probe(holder_coefficient(0.75))
    lip = garding_probe(lipschitz_control())
    _record(6, "Garding probe slopes and bounds", [
        ("holder slope error", abs(holder.slope_vs_eps + 0.25), "<=", 0.05),
        ("largest holder value", float(max(holder.values)), "<=", 0.0),
        ("lipschitz max |value|", float(max(abs(v) for v in lip.values)), "<=", 0.5 * 1.0 + 1e-8),
    ])


def test_7_energy_margin():
    tanh = P(["tanh(x)"], derivatives=["1 - tanh(x)**2"])
    _record(7, "energy estimate margins", [
        ("a = 1 min margin", energy_check(P.constant(1.0), BUMP, 2.0).min_margin, ">=", -1e-8),
        ("a = tanh min margin", energy_check(tanh, BUMP, 2.0).min_margin, ">=", -1e-8),
    ])


def test_8_resolvent(registry):
    rep = registry["semigroup-jump"]
    stage = next(s for s in rep.stages if s.name == "resolvent")
    bounds = [c for c in stage.checks if c.name.startswith("power bound")]
    items = [("bound rows", len(bounds), "==", 15)]
    items += [(c.name, c.measured - c.tolerance, "<=", 0.0) for c in bounds]
    items += [("weak residual", _measured(rep, "resolvent", "weak residual"), "<=", 1e-6),
              ("laplace gap", _measured(rep, "resolvent", "laplace gap"), "<=", 1e-6)]
    _record(8, "resolvent residual, power bounds, Laplace consistency", items)


def test_9_applicability_matrix():
    m = {x.scenario: x for x in theory_matrices()}
    want = [("sign", "hurd-sattinger", "applies"), ("sign", "forward-uniqueness", "fails"),
            ("-sign", "forward-uniqueness", "applies"), ("-sign", "hurd-sattinger", "fails"),
            ("H(-x)", "hurd-sattinger", "fails"), ("H(-x)", "diperna-lions-existence", "fails"),
            ("H(-x)", "diperna-lions-uniqueness", "fails"),
            ("H(-x)", "lafon-oberguggenberger", "applies"),
            ("moving jump", "bouchut-james", "applies"),
            ("2-d sigma=0.75", "diperna-lions-existence", "applies"),
            ("2-d sigma=0.75", "hurd-sattinger", "fails"),
            ("2-d sigma=0.75", "diperna-lions-uniqueness", "applies"),
            ("2-d sigma=0.3", "diperna-lions-existence", "applies"),
            ("2-d sigma=0.3", "hurd-sattinger", "fails"),
            ("2-d sigma=0.3", "diperna-lions-uniqueness", "fails")]
    want += [("tanh", t, "applies") for t in m["tanh"].verdicts]
    _record(9, "applicability verdicts", [(f"{s} / {t}", m[s][t], "==", v) for s, t, v in want])


def test_10_properties_across_registry():
    items = []
    for sid in BUILTIN_IDS:
        try:
            test_properties.test_registry_properties(sid)
            items.append((sid, "green", "==", "green"))
        except AssertionError as exc:
            items.append((sid, f"red: {exc}", "==", "green"))
    seen = set().union(*test_properties.REGISTRY_COUNTS.values())
    for prop in ("monotone", "composition", "normalization", "mass", "linearity"):
        items.append((f"{prop} exercised", prop in seen, "==", True))
    _record(10, "property suites over the registry", items)
