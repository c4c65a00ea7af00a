"""Execute scenario stages and assemble the run report."""

from __future__ import annotations

import json
import math
import time
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import errors
from .applicability import PlanarField, classify
from .colombeau import (DEFAULT_LADDER, coefficient_net, moderateness_exponent,
                        regularized_pairings, shadow)
from .energy import PROBE_LADDER, energy_check, garding_probe
from .flows import ExactFlowMap, filippov_flow_map, flow_semigroup_check
from .pairing import PairingTable, default_family, distribution_distance, pairing_table
from .products import NOT_EXISTS, diamond_product, model_product, pr_product
from .quadrature import integrate_vector
from .scenarios import (build_candidate, build_coefficient, build_probe, build_state,
                        build_test_function, ladder_from_json, parse_complex)
from .semigroup import (bound_table, build_context, laplace_value, resolvent,
                        semigroup_apply, write_bound_csv)
from .semigroup import weak_residual as resolvent_residual
from .transport import (bouchut_james_solve, caratheodory_solve, closed_form,
                        poupaud_rascle_solve, weak_residual)


@dataclass
class RunOptions:
    out: str = "runs"
    tol: float = 1e-10
    eps_min: float | None = None
    jobs: int = 1
    emit_plots: bool = False

    @classmethod
    def from_mapping(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise errors.ParseError(f"unknown option(s) {sorted(unknown)}")
        opts = cls(**data)
        opts.validate()
        return opts

    def validate(self):
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise errors.ParseError("tol must be a positive number")
        if self.eps_min is not None and not 0 < self.eps_min < 1:
            raise errors.ParseError("eps-min must lie in (0, 1)")
        if not (isinstance(self.jobs, int) and self.jobs >= 1):
            raise errors.ParseError("jobs must be a positive integer")


@dataclass
class Check:
    """One assertion: ``measured <comparator> tolerance`` (or equality with ``expected``)."""

    name: str
    measured: object
    tolerance: object
    comparator: str
    passed: bool
    expected: object = None

    def to_json(self):
        out = asdict(self)
        if out["expected"] is None:
            del out["expected"]
        return out


def _le(name, measured, tol):
    measured = float(measured)
    return Check(name, measured, float(tol), "<=", bool(measured <= tol))


def _ge(name, measured, bound):
    measured = float(measured)
    return Check(name, measured, float(bound), ">=", bool(measured >= bound))


def _eq(name, measured, expected):
    return Check(name, measured, None, "==", measured == expected, expected)


@dataclass
class StageResult:
    name: str
    kind: str
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)
    seconds: float = 0.0
    matrix: object = None

    def to_json(self):
        return {"name": self.name, "kind": self.kind, "summary": self.summary,
                "assertions": [c.to_json() for c in self.checks], "files": self.files}


@dataclass
class RunReport:
    scenario: str
    description: str
    source: str
    options: dict
    stages: list

    @property
    def checks(self):
        return [c for s in self.stages for c in s.checks]

    @property
    def failed(self):
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self):
        return not self.failed

    @property
    def matrices(self):
        return [s.matrix for s in self.stages if s.matrix is not None]

    def to_json(self):
        return {
            "scenario": self.scenario,
            "description": self.description,
            "source": self.source,
            "options": self.options,
            "passed": self.passed,
            "n_assertions": len(self.checks),
            "n_failed": len(self.failed),
            "stages": [s.to_json() for s in self.stages],
            "timing": {s.name: round(s.seconds, 6) for s in self.stages},
        }

    def dumps(self):
        return json.dumps(_clean(self.to_json()), indent=2, sort_keys=True)


def _clean(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# -- stage helpers ------------------------------------------------------------------------

class _Context:
    def __init__(self, scenario, opts, outdir):
        self.sc = scenario
        self.opts = opts
        self.outdir = outdir
        self.family = default_family()

    def params(self, stage):
        return self.sc.stage_params(stage)

    def coefficient(self, stage):
        return self.sc.stage_coefficient(stage)

    def datum(self, stage):
        return self.sc.stage_datum(stage)

    def times(self, stage):
        if "times" in stage:
            return [float(t) for t in stage["times"]]
        return [float(t) for t in np.linspace(0.0, self.sc.T, 5)]

    def candidate_solution(self, name, stage):
        fn = self.sc.candidate(name, stage)
        return closed_form(fn, self.sc.T, times=self.times(stage))

    def ladder(self, stage, default):
        cfg = stage.get("ladder", self.sc.ladder)
        ladder = ladder_from_json(cfg, self.opts.eps_min) if cfg is not None else tuple(
            e for e in default if self.opts.eps_min is None or e >= self.opts.eps_min)
        return ladder

    def path(self, result, suffix):
        name = f"{result.name}-{suffix}"
        result.files.append(name)
        return self.outdir / name


def _solve(ctx, stage, concept=None):
    concept = concept or stage["concept"]
    coeff = ctx.coefficient(stage)
    u0 = ctx.datum(stage)
    T, times = ctx.sc.T, ctx.times(stage)
    if concept == "poupaud-rascle":
        return poupaud_rascle_solve(coeff, u0, T, times)
    if concept == "bouchut-james":
        return bouchut_james_solve(coeff, u0, T, times)
    if concept == "caratheodory":
        b = None if ctx.sc.b is None else build_coefficient(ctx.sc.b, ctx.params(stage), T)
        return caratheodory_solve(coeff, b, u0, T, times)
    raise errors.ParseError(f"unknown solution concept {concept!r}")


def _finite_mass(u0):
    return all(math.isfinite(p.lo) and math.isfinite(p.hi) for p in u0.panels)


# -- stages ---------------------------------------------------------------------------------

def stage_solve(ctx, stage, res):
    if "expect_error" in stage:
        want = stage["expect_error"]
        try:
            _solve(ctx, stage)
            got = "none"
        except errors.RoughTransportError as exc:
            got = type(exc).__name__
            res.summary["error"] = str(exc)
        res.checks.append(_eq("raises", got, want))
        return
    sol = _solve(ctx, stage)
    times = ctx.times(stage)
    table = pairing_table(sol, ctx.family, times, tol=ctx.opts.tol)
    table.to_csv(ctx.path(res, "pairings.csv"))
    res.summary["solution"] = sol.to_json(times)
    res.summary["max_quadrature_error"] = table.max_err()
    if "candidate" in stage:
        cand = ctx.candidate_solution(stage["candidate"], stage)
        d = distribution_distance(sol, cand, ctx.family, times, tol=ctx.opts.tol)
        res.checks.append(_le(f"distance to {stage['candidate']}", d, stage.get("tol", 1e-8)))
    u0 = ctx.datum(stage)
    if _finite_mass(u0):
        m0 = u0.mass()
        drift = max(abs(sol.state(t).mass() - m0) for t in times
                    if hasattr(sol.state(t), "mass"))
        res.checks.append(_le("mass drift", drift, stage.get("mass_tol", 1e-10)))
    if ctx.opts.emit_plots:
        coeff = ctx.coefficient(stage)
        try:
            fmap = filippov_flow_map(coeff, ctx.sc.T, np.linspace(-3.0, 3.0, 61))
            fmap.to_csv(ctx.path(res, "flow.csv"), times)
        except errors.RoughTransportError as exc:
            res.summary["flow_plot"] = f"skipped: {exc}"


def _off_centre_ratio(ctx, stage, sol, table):
    """``min |R(phi)| / ((c1 - c2) * scale(phi))`` over the space-time family.

    ``scale(phi) = |lambda - mean| * |int tau(t) t psi'(xi(t)) dt|`` is the
    size of the atom pairing that the mean and prescribed values disagree on.
    """
    coeff = sol.coefficient
    curve = coeff.curves[0]
    rows = table.rows
    from .pairing import default_space_time_family

    family = default_space_time_family(ctx.sc.T)
    left, right = coeff.limits(0, 0.0)
    lam = coeff.prescribed[0](0.0, 0.0)
    dev = abs(lam - 0.5 * (left + right))

    def integrand(ts):
        return np.array([[phi.time(t) * t * phi.space.derivative()(curve(t)) for phi in family]
                         for t in ts])

    cuts = sorted({v for phi in family for v in (*phi.time.support, phi.time.center)})
    vals, _ = integrate_vector(integrand, 0.0, ctx.sc.T, tol=1e-12, breakpoints=cuts)
    scale = dev * np.abs(vals)
    keep = scale > 1e-3 * scale.max()
    R = np.abs([r.value for r in rows])
    return float(np.min(R[keep] / ((left - right) * scale[keep])))


def stage_residual(ctx, stage, res):
    sol = _solve(ctx, stage)
    table = weak_residual(sol, stage.get("form", "conservative"), stage["product"],
                          tol=ctx.opts.tol)
    table.to_csv(ctx.path(res, "residuals.csv"))
    worst = table.max_abs()
    res.summary["max_residual"] = worst
    tol = stage.get("tol", 1e-8)
    if stage["expect"] == "pass":
        res.checks.append(_le("max residual", worst, tol))
    else:
        res.checks.append(_ge("max residual", worst, tol))
        if "margin_factor" in stage:
            ratio = _off_centre_ratio(ctx, stage, sol, table)
            res.summary["margin_ratio"] = ratio
            res.checks.append(_ge("fail margin / ((c1-c2) scale)", ratio, stage["margin_factor"]))


def stage_pr_product(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    u0 = ctx.datum(stage)
    second = None
    if "second_factor" in stage:
        second = ctx.candidate_solution(stage["second_factor"], stage)
    cands = {name: ctx.sc.candidate(name, stage) for name in ctx.sc.candidates}
    out = pr_product(coeff, u0, ctx.sc.T, u=second, candidates=cands,
                     tol=stage.get("tol", 1e-6))
    out.value.to_csv(ctx.path(res, "product.csv"))
    res.summary.update({"status": out.status, "identified": out.identified,
                        "diagnostics": out.diagnostics})
    dist = out.diagnostics["candidate_distance"][stage["candidate"]]
    res.checks.append(_le(f"distance to {stage['candidate']}", dist, stage.get("tol", 1e-6)))


def stage_diamond(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    t = float(stage["t"])
    params = ctx.params(stage)
    u = build_state(stage["u"], params, t)
    got = diamond_product(coeff, u, t)
    want = build_state(stage["expect"], params, t)
    res.summary.update({"product": got.to_json(), "expected": want.to_json()})
    res.checks.append(_eq("atoms", [list(a) for a in got.atoms], [list(a) for a in want.atoms]))
    res.checks.append(_eq("density panels", [p.to_json() for p in got.panels],
                          [p.to_json() for p in want.panels]))


def stage_model_product(ctx, stage, res):
    params = ctx.params(stage)
    u = build_state(stage["u"], params)
    v = build_state(stage["v"], params)
    ladder = ctx.ladder(stage, DEFAULT_LADDER)
    expect = stage["expect"]
    cands = {}
    if expect != NOT_EXISTS:
        cands = {expect: build_state(ctx.sc.candidates[expect], params)}
    out = model_product(u, v, ladder=ladder, tol=stage.get("tol", 1e-4), candidates=cands,
                        jobs=ctx.opts.jobs)
    res.summary.update(out.to_json())
    if isinstance(out.value, PairingTable):
        out.value.to_csv(ctx.path(res, "product.csv"))
    res.checks.append(_eq("status", out.status, NOT_EXISTS if expect == NOT_EXISTS else "defined"))
    if expect == NOT_EXISTS:
        res.checks.append(_ge("growth slope", out.diagnostics["growth_slope"],
                              stage.get("min_slope", 0.9)))
    else:
        dist = out.diagnostics.get("candidate_distance", {}).get(expect, math.inf)
        res.checks.append(_le(f"distance to {expect}", dist, stage.get("tol", 1e-4)))


def stage_shadow(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    u0 = ctx.datum(stage)
    times = ctx.times(stage)
    ladder = ctx.ladder(stage, DEFAULT_LADDER)
    net = regularized_pairings(coeff, u0, ctx.sc.T, ctx.family, times, ladder,
                               stage.get("scale", "log"), tol=ctx.opts.tol, jobs=ctx.opts.jobs)
    cands = {name: ctx.candidate_solution(name, stage) for name in ctx.sc.candidates}
    out = shadow(net, ctx.family, cands, tol=stage.get("tol", 1e-3))
    table = PairingTable()
    for i, t in enumerate(times):
        for j, phi in enumerate(ctx.family):
            table.add(phi, t, out.extrapolated[i, j], 0.0)
    table.to_csv(ctx.path(res, "shadow.csv"))
    res.summary.update({"eps": list(ladder), "identified": out.identified,
                        "distances": out.distances, "increments": list(out.increments)})
    res.checks.append(_eq("identified", out.identified, stage["candidate"]))
    res.checks.append(_le(f"distance to {stage['candidate']}",
                          out.distances[stage["candidate"]], stage.get("tol", 1e-3)))


def stage_growth(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    window = tuple(stage.get("window", (-2.0, 2.0)))
    net = coefficient_net(coeff, ctx.ladder(stage, DEFAULT_LADDER), stage.get("scale", "log"),
                          ctx.sc.T, window)
    net.to_csv(ctx.path(res, "net.csv"), window)
    fit = moderateness_exponent(net, int(stage.get("order", 1)))
    res.summary["fit"] = fit.to_json()
    if stage["expect"] == "log-type":
        res.checks.append(_le("log fit residual", fit.log_residual, stage.get("tol", 0.05)))
    else:
        res.checks.append(_ge("power slope", fit.exponent, stage.get("min_slope", 0.5)))
        res.checks.append(_ge("log fit residual", fit.log_residual, stage.get("tol", 0.05)))


def stage_flow(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    T = ctx.sc.T
    check = stage["check"]
    tol = stage.get("tol", 1e-9)
    if check == "sliding":
        fmap = ExactFlowMap(coeff, T, np.linspace(-3.0, 3.0, 61))
        left, right = coeff.limits(0, 0.0)
        rate = coeff.curves[0].slope(0.0)
        worst = 0.0
        for t in ctx.times(stage)[1:]:
            r = t * min(left - rate, rate - right)
            xs = np.linspace(-r, r, 33)
            worst = max(worst, float(np.max(np.abs(fmap(t, xs) - rate * t))))
        res.checks.append(_le("sliding deviation", worst, tol))
    elif check == "composition":
        fmap = filippov_flow_map(coeff, T, np.linspace(-3.0, 3.0, 61))
        grid = np.linspace(-3.0, 3.0, 121)
        worst = max(flow_semigroup_check(fmap, r * T, s * T, grid)
                    for r, s in ((0.25, 0.5), (0.5, 0.5), (0.1, 0.7)))
        res.checks.append(_le("composition defect", worst, tol))
    elif check == "monotone":
        fmap = filippov_flow_map(coeff, T, np.linspace(-3.0, 3.0, 61))
        worst = max(float(np.max(-np.diff(fmap(t, fmap.x_grid)))) for t in ctx.times(stage))
        res.checks.append(_le("order violation", max(worst, 0.0), 0.0))
    else:
        raise errors.ParseError(f"unknown flow check {check!r}")
    res.summary["check"] = check
    if ctx.opts.emit_plots:
        fmap.to_csv(ctx.path(res, "flow.csv"), ctx.times(stage))


def stage_classify(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    label = stage.get("label", ctx.sc.id)
    if isinstance(coeff, PlanarField):
        matrix = classify(coeff, dimension=2, p=stage.get("p"), name=label,
                          u0_class=stage.get("u0_class", "Lp"))
    else:
        c = stage.get("c", ctx.sc.c)
        aux = None if c is None else build_coefficient(
            c if isinstance(c, dict) else {"pieces": [c]}, ctx.params(stage), ctx.sc.T)
        matrix = classify(coeff, aux, stage.get("u0_class", "L2"), T=ctx.sc.T,
                          form=stage.get("form", "conservative"), p=stage.get("p"), name=label)
    res.matrix = matrix
    res.summary["matrix"] = matrix.to_json()
    for theory, want in stage["expect"].items():
        res.checks.append(_eq(f"verdict {theory}", matrix[theory], want))


def stage_energy(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    u0 = ctx.datum(stage)
    params = ctx.params(stage)
    c = stage.get("c", ctx.sc.c)
    f = stage.get("f_expr", ctx.sc.f)
    c = None if c is None else build_coefficient({"pieces": [c]}, params, ctx.sc.T)
    f = None if f is None else build_coefficient({"pieces": [f]}, params, ctx.sc.T)
    times = stage.get("times", np.linspace(0.0, ctx.sc.T, 11))
    rep = energy_check(coeff, u0, ctx.sc.T, c=c, f=f, times=times)
    res.summary["report"] = rep.to_json()
    if ctx.opts.emit_plots:
        rep.to_csv(ctx.path(res, "energy.csv"))
    res.checks.append(_ge("min margin", rep.min_margin, -stage.get("tol", 1e-8)))


def stage_garding(ctx, stage, res):
    probe = build_probe(stage["probe"], ctx.params(stage))
    out = garding_probe(probe, ctx.ladder(stage, PROBE_LADDER), jobs=ctx.opts.jobs)
    out.to_csv(ctx.path(res, "probe.csv"))
    res.summary.update(out.to_json())
    tol = stage.get("tol", 0.05)
    if "slope" in stage:
        res.checks.append(_le("slope error", abs(out.slope_vs_eps - stage["slope"]), tol))
    if "sign" in stage:
        s = int(stage["sign"])
        res.checks.append(_eq("sign of every value", sorted({int(np.sign(v)) for v in out.values}),
                              [s]))
    if "lipschitz" in stage:
        bound = 0.5 * float(stage["lipschitz"]) + tol
        res.checks.append(_le("max |value|", max(abs(v) for v in out.values), bound))
    if stage.get("log_type"):
        res.checks.append(_le("log fit residual", out.log_fit.log_residual, tol))


def stage_semigroup(ctx, stage, res):
    coeff = ctx.coefficient(stage)
    params = ctx.params(stage)
    sg = build_context(coeff, tuple(stage.get("window", (-4.0, 60.0))))
    f = build_test_function(stage["f"], params)
    mus = [parse_complex(m) for m in stage.get("mus", ([1, 0], [2, 0], [1, 1]))]
    ks = [int(k) for k in stage.get("ks", range(1, 6))]
    rows = bound_table(sg, f, mus, ks, stage.get("tol", 1e-8))
    write_bound_csv(rows, ctx.path(res, "bounds.csv"))
    res.summary["bounds"] = [r.to_json() for r in rows]
    for r in rows:
        res.checks.append(_le(f"power bound mu={r.mu:g} k={r.k}", r.lhs, r.rhs))
    resid, lap = [], []
    for mu in mus:
        v = resolvent(sg, mu, f)
        resid.append(float(np.max(np.abs(resolvent_residual(sg, mu, v, f, ctx.family)))))
        lap.append(max(abs(v(x) - laplace_value(sg, mu, f, x)) for x in stage.get("points", (0.0,))))
    res.summary.update({"weak_residual": resid, "laplace_gap": lap})
    res.checks.append(_le("weak residual", max(resid), stage.get("residual_tol", 1e-6)))
    res.checks.append(_le("laplace gap", max(lap), stage.get("laplace_tol", 1e-6)))
    if "composition_tol" in stage:
        xs = np.linspace(1.0, 20.0, 191)
        worst = 0.0
        for s, t in ((0.3, 0.7), (1.1, 2.5), (2.0, 2.0)):
            lhs = semigroup_apply(sg, s, semigroup_apply(sg, t, f))(xs)
            rhs = semigroup_apply(sg, s + t, f)(xs)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        res.summary["composition_defect"] = worst
        res.checks.append(_le("composition defect", worst, stage["composition_tol"]))


STAGES = {
    "solve": stage_solve,
    "residual": stage_residual,
    "pr-product": stage_pr_product,
    "diamond": stage_diamond,
    "model-product": stage_model_product,
    "shadow": stage_shadow,
    "growth": stage_growth,
    "flow": stage_flow,
    "classify": stage_classify,
    "energy": stage_energy,
    "garding": stage_garding,
    "semigroup": stage_semigroup,
}


def run_scenario(scenario, opts=None, write=True):
    """Run every stage, write ``report.json`` and CSV tables, return the report.

    A stage that raises records a failed ``completed`` assertion instead of
    aborting the run.
    """
    opts = opts or RunOptions()
    outdir = Path(opts.out) / scenario.id
    if write:
        outdir.mkdir(parents=True, exist_ok=True)
    ctx = _Context(scenario, opts, outdir if write else _Discard())
    stages = []
    for stage in scenario.stages:
        res = StageResult(stage["name"], stage["kind"])
        start = time.perf_counter()
        try:
            STAGES[stage["kind"]](ctx, stage, res)
        except Exception as exc:  # noqa: BLE001 - reported as a failed assertion
            res.summary["error"] = f"{type(exc).__name__}: {exc}"
            res.summary["traceback"] = traceback.format_exc(limit=4).splitlines()[-1]
            res.checks.append(Check("completed", False, None, "==", False, True))
        res.seconds = time.perf_counter() - start
        if not write:
            res.files = []
        stages.append(res)
    report = RunReport(scenario.id, scenario.description, scenario.source,
                       {"tol": opts.tol, "eps_min": opts.eps_min, "emit_plots": opts.emit_plots},
                       stages)
    if write:
        (outdir / "report.json").write_text(report.dumps() + "\n")
    return report


class _Discard:
    """Output directory stand-in that throws files away."""

    def __truediv__(self, name):
        return Path("/dev/null")
