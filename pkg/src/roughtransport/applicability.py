"""Which solution theories apply to a given coefficient.

Every verdict carries its evidence: a sampled quantity, a structural fact
about the piecewise representation, or a declared regularity tag.  A verdict
that needs an undeclared tag is ``unknown``, never guessed.
"""

from __future__ import annotations

import ast
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .colombeau import DEFAULT_LADDER, LOG, growth_fit, mollify
from .errors import MissingMetadata
from .expr import Expr
from .piecewise import lower_quotient_details, one_sided_lipschitz_details, quotient_sup

APPLIES, FAILS, UNKNOWN = "applies", "fails", "unknown"

THEORIES = (
    "caratheodory",
    "forward-uniqueness",
    "filippov-basic",
    "bouchut-james",
    "hurd-sattinger",
    "diperna-lions-existence",
    "diperna-lions-uniqueness",
    "lafon-oberguggenberger",
)

DATA_EXPONENTS = {"L1": 1.0, "L2": 2.0, "Linf": math.inf}


@dataclass(frozen=True)
class Condition:
    """One numbered hypothesis: ``ok`` is ``True``, ``False`` or ``None`` (undecided)."""

    condition: str
    ok: object
    evidence: str
    source: str = "sampled"

    def to_json(self):
        return {"condition": self.condition, "ok": self.ok, "evidence": self.evidence,
                "source": self.source}


@dataclass
class Verdict:
    theory: str
    status: str
    conditions: list = field(default_factory=list)
    reason: str = ""

    @property
    def failed(self):
        return [c.condition for c in self.conditions if c.ok is False]

    def to_json(self):
        return {"theory": self.theory, "status": self.status, "reason": self.reason,
                "failed": self.failed, "conditions": [c.to_json() for c in self.conditions]}


def _verdict(theory, conditions):
    if any(c.ok is False for c in conditions):
        bad = next(c for c in conditions if c.ok is False)
        return Verdict(theory, FAILS, conditions, f"({bad.condition}) {bad.evidence}")
    if any(c.ok is None for c in conditions):
        bad = next(c for c in conditions if c.ok is None)
        return Verdict(theory, UNKNOWN, conditions, f"({bad.condition}) {bad.evidence}")
    return Verdict(theory, APPLIES, conditions, "all conditions hold")


@dataclass
class TheoryMatrix:
    """Verdicts per theory, in the fixed theory order."""

    verdicts: dict
    scenario: str = ""

    def __getitem__(self, theory):
        return self.verdicts[theory].status

    def statuses(self):
        return {k: v.status for k, v in self.verdicts.items()}

    def to_json(self):
        return {"scenario": self.scenario,
                "verdicts": {k: self.verdicts[k].to_json() for k in THEORIES if k in self.verdicts}}

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def render(self):
        width = max(len(t) for t in THEORIES)
        lines = [f"{'theory':<{width}}  verdict  reason"]
        for t in THEORIES:
            if t in self.verdicts:
                v = self.verdicts[t]
                lines.append(f"{t:<{width}}  {v.status:<7}  {v.reason}")
        return "\n".join(lines)


def render_table(matrices):
    """Scenario-by-theory table of verdict symbols."""
    mark = {APPLIES: "+", FAILS: "-", UNKNOWN: "?"}
    short = [t.replace("diperna-lions", "dpl").replace("lafon-oberguggenberger", "lo")
             .replace("forward-uniqueness", "fwd-unique") for t in THEORIES]
    width = max(len(m.scenario) for m in matrices) if matrices else 8
    head = f"{'scenario':<{width}}  " + "  ".join(short)
    rows = [head]
    for m in matrices:
        cells = [mark[m[t]].center(len(s)) for t, s in zip(THEORIES, short)]
        rows.append(f"{m.scenario:<{width}}  " + "  ".join(cells))
    return "\n".join(rows)


# -- helpers -----------------------------------------------------------------------

def _times(coeff, T, n=9):
    return [0.0] if coeff.is_autonomous else list(np.linspace(0.0, T, n))


def _jumps(coeff, T):
    """Largest absolute jump across any curve at sampled times."""
    if not getattr(coeff, "curves", ()):
        return 0.0
    return max((abs(J) for t in _times(coeff, T) for J in coeff.jumps(t)), default=0.0)


def _sampled_sup(fn, coeff, T, window, n=4097):
    xs = np.linspace(window[0], window[1], n)
    return float(max(np.max(np.abs(fn(t, xs))) for t in _times(coeff, T)))


def _derivative_sup(coeff, T, window):
    """Sup of ``|a_x|`` off the curves; finite for piecewise-smooth pieces unless a tag says otherwise."""
    tags = getattr(coeff, "regularity", {}) or {}
    if "gradient_singularity" in tags:
        return math.inf
    xs = np.linspace(window[0], window[1], 4097)
    sup = 0.0
    for t in _times(coeff, T):
        pos = coeff.curve_positions(t)
        keep = np.all(np.abs(xs[:, None] - pos[None, :]) > 1e-2, axis=1) if len(pos) else slice(None)
        vals = np.asarray(coeff.dx(t, xs[keep]), dtype=float)
        sup = max(sup, float(np.max(np.abs(vals))) if vals.size else 0.0)
    return sup


def _data_exponent(u0_class, p):
    if p is not None:
        return float(p)
    if u0_class in DATA_EXPONENTS:
        return DATA_EXPONENTS[u0_class]
    return None


# -- per theory ---------------------------------------------------------------------

def caratheodory_conditions(coeff, T):
    jump = _jumps(coeff, T)
    beta = coeff.envelope(0.0, T)
    return [
        Condition("i", jump == 0.0, f"largest jump in x: {jump:g}", "structural"),
        Condition("ii", True, "pieces are closed-form expressions in t", "structural"),
        Condition("iii", math.isfinite(beta), f"envelope beta = {beta:g}", "sampled"),
    ]


def forward_uniqueness_conditions(coeff, T, window):
    est = one_sided_lipschitz_details(coeff, ((0.0, T), window))
    ok = math.isfinite(est.value)
    where = f" near x in [{est.location[1]:.3g}, {est.location[2]:.3g}]" if len(est.location) > 2 else ""
    return [Condition("osl", ok, f"one-sided Lipschitz alpha = {est.value:g}{where}", "sampled")]


def filippov_conditions(coeff, T):
    beta = coeff.envelope(0.0, T)
    bounded = math.isfinite(beta)
    return [
        Condition("i", bounded, "hull of the one-sided limits is a bounded interval", "structural"),
        Condition("ii", True, "pieces and curves are closed-form in t", "structural"),
        Condition("iii", bounded, "graph over compacts is closed and bounded", "structural"),
        Condition("iv", bounded, f"beta = {beta:g}", "sampled"),
    ]


def bouchut_james_conditions(coeff, T, samples=33, tol=1e-8):
    """Conditions (i)-(v) for the piecewise representation with its on-curve values."""
    T = T if math.isfinite(T) else 1.0
    times = np.linspace(0.0, T, samples)
    curves = getattr(coeff, "curves", ())
    conds = [
        Condition("i", True, "no isolated singular points in the piecewise class", "structural"),
        Condition("ii", True, "pieces are continuous expressions", "structural"),
        Condition("iii", True, f"{len(curves)} C1 jump curves with one-sided limits", "structural"),
    ]
    worst_iv, worst_v = 0.0, 0.0
    for j, curve in enumerate(curves):
        for t in times:
            am, ap = coeff.limits(j, t)
            if am == ap:
                continue  # no discontinuity: the curve is not part of D
            lam = coeff.on_curve_value(j, t)
            lo, hi = min(am, ap), max(am, ap)
            worst_iv = max(worst_iv, lo - lam, lam - hi)
            worst_v = max(worst_v, abs(curve.slope(t) - lam))
    conds.append(Condition("iv", worst_iv <= tol,
                           f"largest excursion of the on-curve value outside [a-, a+]: {max(worst_iv, 0.0):g}"))
    conds.append(Condition("v", worst_v <= tol,
                           f"largest defect |xi' - a(t, xi)| on curves: {worst_v:g}"))
    return conds


def hurd_sattinger_conditions(coeff, T, window, b=None, u0_class="L2"):
    conds = []
    T1 = T
    sup_a = _sampled_sup(lambda t, x: np.maximum(coeff(t, x), 0.0), coeff, T1, window)
    conds.append(Condition("i", math.isfinite(sup_a), f"sup a = {sup_a:g}"))
    if b is None:
        conds.append(Condition("ii", True, "b = 0", "structural"))
    else:
        inf_b = -_sampled_sup(lambda t, x: np.maximum(-np.asarray(b(t, x)), 0.0), b, T1, window)
        conds.append(Condition("ii", math.isfinite(inf_b), f"inf b = {inf_b:g}"))
    times = _times(coeff, T1, 9)
    lows, diverged = [], False
    for t in times:
        est = lower_quotient_details(_Frozen(coeff, t), ((t, t), window))
        lows.append(est.value)
        diverged |= est.diverged or not math.isfinite(est.value)
    if diverged:
        conds.append(Condition("iii", False, "difference quotients unbounded below "
                               f"(inf over samples {min(lows):g})"))
    elif not coeff.is_autonomous and _unbounded_in_time(coeff, T1, window, lows):
        conds.append(Condition("iii", None, "lower envelope mu_k(t) grows under time refinement; "
                               "local integrability cannot be certified"))
    else:
        conds.append(Condition("iii", True, f"mu_1 = {max(0.0, -min(lows)):g}"))
    if u0_class == "measure":
        conds.append(Condition("data", False, "initial datum is a measure, not L2_loc", "declared"))
    return conds


class _Frozen:
    """A coefficient frozen at one time (autonomous view for quotient sampling)."""

    is_autonomous = True

    def __init__(self, coeff, t):
        self.coeff, self.t = coeff, float(t)

    def __call__(self, t, x):
        return self.coeff(self.t, x)


def _unbounded_in_time(coeff, T, window, lows):
    finer = []
    for t in np.linspace(0.0, T, 2 * len(lows) - 1):
        finer.append(lower_quotient_details(_Frozen(coeff, t), ((t, t), window)).value)
    return -min(finer) > 2.0 * max(1.0, -min(lows))


def _w1q(coeff, q, jump, T, window):
    """Membership of ``a`` in ``W^{1,q}_loc``: jumps exclude it; tags settle singular gradients."""
    tags = getattr(coeff, "regularity", {}) or {}
    if jump > 0:
        return False, "jump discontinuity: the derivative carries a Dirac mass", "structural"
    sing = tags.get("gradient_singularity")
    if sing is not None:
        expo, codim = float(sing["exponent"]), float(sing.get("codim", 1.0))
        ok = q * expo < codim
        return ok, f"|grad a| ~ dist^-{expo:g} near a set of codimension {codim:g}; q = {q:g}", "declared"
    dsup = _derivative_sup(coeff, T, window)
    if math.isfinite(dsup):
        return True, f"sup |a_x| = {dsup:g} (locally Lipschitz)", "sampled"
    raise MissingMetadata("gradient regularity of a is not declared")


def diperna_lions_conditions(coeff, T, window, c=None, form="conservative", u0_class="L2",
                             p=None, uniqueness=False):
    """Existence (and optionally uniqueness) hypotheses in the transport form ``P``.

    In conservative form the transport-form zeroth-order coefficient is
    ``div a + b``, so a jump of ``a`` puts a Dirac mass into it.
    """
    conds = []
    p = _data_exponent(u0_class, p)
    if u0_class == "measure":
        conds.append(Condition("data", False, "initial datum is a measure, not in any L^p", "declared"))
        return conds
    if p is None:
        raise MissingMetadata("the Lebesgue exponent p of the data is not declared")
    q = math.inf if p == 1.0 else (1.0 if math.isinf(p) else p / (p - 1.0))
    jump = _jumps(coeff, T)
    if form == "conservative" and jump > 0:
        conds.append(Condition("c", False, f"c = div a + b contains a Dirac mass of size {jump:g}",
                               "structural"))
    elif form != "conservative" and jump > 0:
        conds.append(Condition("div-c", False, f"div a - c contains a Dirac mass of size {jump:g}",
                               "structural"))
    else:
        dsup = _derivative_sup(coeff, T, window)
        csup = 0.0 if c is None else _sampled_sup(c, coeff, T, window)
        ok = math.isfinite(dsup) and math.isfinite(csup)
        conds.append(Condition("Linf", ok, f"sup |div a| = {dsup:g}, sup |c| = {csup:g}"))
    if uniqueness and all(cd.ok for cd in conds):
        ok, ev, src = _w1q(coeff, q, jump, T, window)
        conds.append(Condition("W1q", ok, ev, src))
        beta = coeff.envelope(0.0, T)
        conds.append(Condition("growth", math.isfinite(beta), f"a/(1+|x|) bounded by {beta:g}"))
    return conds


def log_type_conditions(coeff, T, window, ladder=DEFAULT_LADDER, level=10):
    """Lafon-Oberguggenberger: ``sup |d_x a_eps|`` of logarithmic type on the log scale."""
    xs = np.linspace(window[0], window[1], 2 ** level + 1)
    sups = []
    for e in ladder:
        m = mollify(coeff, e, LOG)
        s = 0.0
        for t in _times(coeff, T, 5):
            pts = np.concatenate([xs, coeff.curve_positions(t)])
            s = max(s, float(np.max(np.abs(m.derivative(t, pts, 1)))))
        sups.append(s)
    fit = growth_fit(ladder, sups, 1)
    return [Condition("log-type", fit.log_type,
                      f"sup|a_eps'| ~ {fit.log_N:.4g} log(C/eps), fit residual {fit.log_residual:.3g}, "
                      f"power slope {fit.exponent:.3g}")]


_CHECKS = {
    "caratheodory": lambda ctx: caratheodory_conditions(ctx["a"], ctx["T"]),
    "forward-uniqueness": lambda ctx: forward_uniqueness_conditions(ctx["a"], ctx["T"], ctx["window"]),
    "filippov-basic": lambda ctx: filippov_conditions(ctx["a"], ctx["T"]),
    "bouchut-james": lambda ctx: bouchut_james_conditions(ctx["a"], ctx["T"]),
    "hurd-sattinger": lambda ctx: hurd_sattinger_conditions(ctx["a"], ctx["T"], ctx["window"],
                                                            ctx["b"], ctx["u0_class"]),
    "diperna-lions-existence": lambda ctx: diperna_lions_conditions(
        ctx["a"], ctx["T"], ctx["window"], ctx["c"], ctx["form"], ctx["u0_class"], ctx["p"]),
    "diperna-lions-uniqueness": lambda ctx: diperna_lions_conditions(
        ctx["a"], ctx["T"], ctx["window"], ctx["c"], ctx["form"], ctx["u0_class"], ctx["p"],
        uniqueness=True),
    "lafon-oberguggenberger": lambda ctx: log_type_conditions(ctx["a"], ctx["T"], ctx["window"],
                                                              ctx["ladder"]),
}


def classify(coeff, aux_c=None, u0_class="L2", dimension=1, *, b=None, form="conservative",
             T=1.0, window=(-3.0, 3.0), p=None, ladder=DEFAULT_LADDER, theories=THEORIES,
             name=""):
    """Verdict of every theory for ``d_t u + d_x(a u) + b u`` (or ``P`` with ``c``)."""
    if dimension == 2:
        return classify_planar(coeff, p=p, u0_class=u0_class, T=T, name=name, theories=theories)
    if dimension != 1:
        raise ValueError("only one and two space dimensions are supported")
    ctx = {"a": coeff, "b": b, "c": aux_c, "u0_class": u0_class, "form": form, "T": float(T),
           "window": tuple(window), "p": p, "ladder": ladder}
    out = {}
    for theory in theories:
        try:
            out[theory] = _verdict(theory, _CHECKS[theory](ctx))
        except MissingMetadata as exc:
            out[theory] = Verdict(theory, UNKNOWN, [], f"missing metadata: {exc}")
    return TheoryMatrix(out, name)


# -- two space dimensions ---------------------------------------------------------------

def planar_expr(text, params=None):
    """Expression in ``(x, y)``; evaluate as ``e(x, y)``."""
    tree = ast.parse(text, mode="eval")
    names = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}
    if "t" in names:
        raise ValueError("planar fields are time independent; 't' is not allowed")
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id == "y":
            node.id = "t"
    inner = Expr(ast.unparse(tree), params)
    return lambda x, y: inner(np.asarray(y, dtype=float), np.asarray(x, dtype=float))


@dataclass
class PlanarField:
    """A time-independent planar coefficient ``(a1, a2)`` with a closed-form divergence."""

    a1: object
    a2: object
    div: object
    regularity: dict = field(default_factory=dict)
    c: object = None
    box: tuple = (-2.5, 2.5)

    @classmethod
    def from_text(cls, a1, a2, div, params=None, regularity=None, c=None, box=(-2.5, 2.5)):
        return cls(planar_expr(a1, params), planar_expr(a2, params), planar_expr(div, params),
                   dict(regularity or {}), None if c is None else planar_expr(c, params), box)

    def sup(self, fn, n=401):
        g = np.linspace(self.box[0], self.box[1], n)
        X, Y = np.meshgrid(g, g)
        return float(np.max(np.abs(fn(X, Y))))


def classify_planar(field_, p=None, u0_class="Lp", T=1.0, name="", theories=THEORIES):
    """Verdicts for ``d_t u + a . grad u + c u`` in two space dimensions."""
    tags = field_.regularity
    out = {}
    beta = max(field_.sup(field_.a1), field_.sup(field_.a2))
    continuous = tags.get("continuous")
    for theory in theories:
        if theory == "caratheodory":
            conds = [Condition("i", None if continuous is None else bool(continuous),
                               "declared continuity" if continuous is not None
                               else "continuity of a planar field is not declared", "declared"),
                     Condition("iii", math.isfinite(beta), f"sup |a| = {beta:g}")]
            out[theory] = _verdict(theory, conds)
        elif theory == "filippov-basic":
            out[theory] = _verdict(theory, [Condition("iv", math.isfinite(beta), f"beta = {beta:g}")])
        elif theory == "hurd-sattinger":
            out[theory] = _verdict(theory, _planar_hs(field_))
        elif theory in ("diperna-lions-existence", "diperna-lions-uniqueness"):
            try:
                conds = _planar_dpl(field_, p, u0_class, theory.endswith("uniqueness"))
                out[theory] = _verdict(theory, conds)
            except MissingMetadata as exc:
                out[theory] = Verdict(theory, UNKNOWN, [], f"missing metadata: {exc}")
        elif theory == "bouchut-james":
            out[theory] = _verdict(theory, [Condition("dimension", False,
                                                      "defined in one space dimension only",
                                                      "structural")])
        else:
            out[theory] = Verdict(theory, UNKNOWN, [], "no planar checker for this theory")
    return TheoryMatrix(out, name)


def _planar_hs(field_):
    conds = [Condition("i", True, f"sup a_k = {max(field_.sup(field_.a1), field_.sup(field_.a2)):g}")]
    conds.append(Condition("ii", True, "b = 0", "structural"))
    lo, hi = field_.box
    worst = math.inf
    for k, comp in ((1, field_.a1), (2, field_.a2)):
        for y0 in (0.0, 0.5, -0.5):
            if k == 1:
                fn = lambda s, y0=y0, comp=comp: -np.asarray(comp(s, np.full_like(s, y0)))
            else:
                fn = lambda s, y0=y0, comp=comp: -np.asarray(comp(np.full_like(s, y0), s))
            est = quotient_sup(fn, lo, hi)
            if est.diverged or not math.isfinite(est.value):
                conds.append(Condition("iii", False,
                                       f"quotients of a_{k} along x_{k} unbounded below "
                                       f"(slice at {y0:g})"))
                return conds
            worst = min(worst, -est.value)
    conds.append(Condition("iii", True, f"mu = {max(0.0, -worst):g}"))
    return conds


def _planar_dpl(field_, p, u0_class, uniqueness):
    p = _data_exponent(u0_class, p)
    if p is None:
        raise MissingMetadata("the Lebesgue exponent p of the data is not declared")
    q = math.inf if p == 1.0 else (1.0 if math.isinf(p) else p / (p - 1.0))
    c = field_.c if field_.c is not None else field_.div
    dsup = field_.sup(field_.div)
    csup = field_.sup(c)
    conds = [Condition("Linf", math.isfinite(dsup) and math.isfinite(csup),
                       f"sup |div a| = {dsup:g}, sup |c| = {csup:g}")]
    if p > 1:
        comb = lambda x, y: field_.div(x, y) / p - c(x, y)
        s = field_.sup(comb)
        conds.append(Condition("existence", math.isfinite(s), f"sup |div a / p - c| = {s:g}"))
    if uniqueness:
        sing = field_.regularity.get("gradient_singularity")
        if sing is None:
            raise MissingMetadata("gradient regularity of the planar field is not declared")
        expo, codim = float(sing["exponent"]), float(sing.get("codim", 1.0))
        conds.append(Condition("W1q", q * expo < codim,
                               f"|grad a| ~ dist^-{expo:g} near a set of codimension {codim:g}, "
                               f"q = {q:g}", "declared"))
        conds.append(Condition("growth", True, "compactly supported field", "declared"))
    return conds
