"""Measure solutions built from characteristic flows, and weak residuals."""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ConditionViolated, ForwardUniquenessViolated, NotApplicable
from .flows import ExactFlowMap, SeparableFlow, _filippov_numeric, _forward_unique, solve_vector
from .measures import DensityPanel, MeasureState, merge_atoms
from .pairing import PairingTable, default_space_time_family, pair_many
from .quadrature import integrate_vector

PROVENANCES = ("poupaud-rascle", "caratheodory", "bouchut-james", "colombeau-shadow")


# {{{ exact pushforward

def pushforward_exact(flow, u0, t, velocity_weighted=False):
    """Image of ``u0`` under ``chi(t, .)`` for an exact piecewise flow.

    With ``velocity_weighted`` every piece of mass is multiplied by the
    flow velocity ``d/dt chi(t, x)`` at its start point.
    """
    if t == 0 and not velocity_weighted:
        return u0.at(0.0)
    tracker = flow.tracker
    cells = tracker.cells(t) if t > 0 else [(-math.inf, math.inf, 1.0, 0.0, None)]
    atoms = []
    for x, w in u0.atoms:
        weight = w * tracker.velocity(t, x) if velocity_weighted else w
        atoms.append((tracker.position(t, x), weight))
    panels = []
    for p in u0.panels:
        for lo, hi, slope, offset, vel in cells:
            a, b = max(lo, p.lo), min(hi, p.hi)
            if b <= a:
                continue
            if vel is None:
                vel = tracker.velocity(t, _midpoint(a, b))
            weight = vel if velocity_weighted else 1.0
            if weight == 0.0:
                continue
            if slope == 0.0:
                # collapsed interval: its mass becomes an atom at the image point
                piece = MeasureState(0.0, (), (DensityPanel(a, b, p.density, p.breaks),))
                atoms.append((offset, weight * piece.mass(a, b)))
            else:
                sub = DensityPanel(a, b, p.density, tuple(v for v in p.breaks if a < v < b))
                image = (_image(tracker, t, a), _image(tracker, t, b))
                panels.append(sub.pushed_affine(slope, offset, weight, image))
    return MeasureState(float(t), merge_atoms(atoms), tuple(_coalesce(panels)))


def _image(tracker, t, x):
    return x if math.isinf(x) else tracker.position(t, x)


def _midpoint(a, b):
    if math.isinf(a):
        return b - 1.0
    if math.isinf(b):
        return a + 1.0
    return 0.5 * (a + b)


def _coalesce(panels):
    """Join adjacent panels carrying the same expression; snap rounding overlaps."""
    out = []
    for p in sorted(panels, key=lambda q: q.lo):
        if out and p.lo < out[-1].hi <= p.lo + 1e-12 * max(1.0, abs(p.lo)):
            # images of neighbouring cells computed along different paths
            p = DensityPanel(out[-1].hi, p.hi, p.density,
                             tuple(b for b in p.breaks if b > out[-1].hi))
        if out and out[-1].hi == p.lo and out[-1].is_expr and p.is_expr \
                and out[-1].density == p.density:
            q = out.pop()
            out.append(DensityPanel(q.lo, p.hi, q.density, q.breaks + (p.lo,) + p.breaks))
        else:
            out.append(p)
    return out

# }}}


# {{{ solutions

class MeasureSolution:
    """Time-dependent measure ``u(t)`` with a provenance tag.

    ``state_fn(t)`` produces the state; results are cached per time.
    """

    def __init__(self, state_fn, T, provenance, coefficient=None, u0=None, times=None):
        if provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {provenance!r}")
        self._state_fn = state_fn
        self.T = float(T)
        self.provenance = provenance
        self.coefficient = coefficient
        self.u0 = u0
        self.times = list(np.linspace(0.0, self.T, 5) if times is None else times)
        self._cache = {}

    def state(self, t):
        t = float(t)
        if t not in self._cache:
            if t == 0.0 and self.u0 is not None:
                self._cache[t] = self.u0.at(0.0)
            else:
                self._cache[t] = self._state_fn(t)
        return self._cache[t]

    def pairing_matrix(self, family, times, tol=1e-10):
        vals = np.zeros((len(times), len(family)))
        errs = np.zeros_like(vals)
        for i, t in enumerate(times):
            vals[i], errs[i] = pair_many(self.state(t), family, tol)
        return vals, errs

    def to_json(self, times=None):
        times = self.times if times is None else times
        return {
            "provenance": self.provenance,
            "T": self.T,
            "states": [self.state(t).to_json() for t in times],
        }

    def dumps(self, times=None):
        return json.dumps(self.to_json(times), indent=2)


def closed_form(state_fn, T, provenance="poupaud-rascle", times=None):
    """Wrap a closed-form ``t -> MeasureState`` as a solution."""
    return MeasureSolution(state_fn, T, provenance, times=times)


class PullbackSolution(MeasureSolution):
    """Numeric solution known through pairings ``<u0, h(t,.) phi(chi(t,.))>``.

    Pairings are computed by adaptive quadrature over start points where
    every refinement round integrates all new start points at once.
    """

    def __init__(self, coeff, u0, T, provenance, b=None, method="caratheodory", times=None,
                 rtol=1e-11, atol=1e-12, panel_density=4):
        super().__init__(None, T, provenance, coeff, u0, times)
        self.panel_density = panel_density
        self.b = b
        self.method = method
        self.rtol, self.atol = rtol, atol
        self.beta = coeff.envelope(0.0, self.T)

    def state(self, t):
        if float(t) == 0.0:
            return self.u0.at(0.0)
        return PulledBackState(self, float(t))

    def trajectories(self, x0, times):
        """Positions and weights ``h_b``, each of shape ``(len(times), len(x0))``."""
        x0 = np.asarray(x0, dtype=float)
        times = np.asarray(times, dtype=float)
        order = np.argsort(times)
        ts = times[order]
        n = len(x0)
        if self.method == "separable":
            pos = self._separable_flow(x0).positions(x0, ts)
            wts = np.ones_like(pos)
        elif self.method == "filippov":
            pos = np.array([[_filippov_numeric(self.coefficient, v, t) if t > 0 else v
                             for v in x0] for t in ts])
            wts = np.ones_like(pos)
        elif self.b is None:
            a = self.coefficient
            pos = solve_vector(lambda s, y: a(s, y), x0, ts, self.rtol, self.atol)
            wts = np.ones_like(pos)
        else:
            a, b = self.coefficient, self.b

            def rhs(s, y):
                return np.concatenate([a(s, y[:n]), b(s, y[:n])])

            y0 = np.concatenate([x0, np.zeros(n)])
            full = solve_vector(rhs, y0, ts, self.rtol, self.atol)
            pos, wts = full[:, :n], np.exp(-full[:, n:])
            wts[ts == 0.0] = 1.0
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        return pos[inv], wts[inv]

    def _separable_flow(self, x0):
        lo, hi = float(np.min(x0)), float(np.max(x0))
        cached = getattr(self, "_flow_cache", None)
        if cached is not None and cached[0] <= lo and hi <= cached[1]:
            return cached[2]
        g, c, focus = self.coefficient.comoving()
        if cached is not None:
            lo, hi = min(lo, cached[0]), max(hi, cached[1])
        lo, hi = lo - 2.0, hi + 2.0
        reach = (self.beta + abs(c)) * self.T + 1.0
        flow = SeparableFlow(g, c, lo - reach, hi + reach, focus)
        self._flow_cache = (lo, hi, flow)
        return flow

    def pairing_matrix(self, family, times, tol=1e-10):
        times = [float(t) for t in times]
        m = len(family)
        vals = np.zeros((len(times), m))
        errs = np.zeros_like(vals)
        if self.u0.atoms:
            xs = np.array([x for x, _ in self.u0.atoms])
            ws = np.array([w for _, w in self.u0.atoms])
            pos, h = self.trajectories(xs, times)
            for j, phi in enumerate(family):
                vals[:, j] += (ws[None, :] * h * phi(pos)).sum(axis=1)
        lo_s = min(phi.support[0] for phi in family) - self.beta * max(times) - 1e-9
        hi_s = max(phi.support[1] for phi in family) + self.beta * max(times) + 1e-9
        panels = [p for p in self.u0.panels if p.hi > lo_s and p.lo < hi_s]
        share = tol / max(1, len(panels))

        def integrand(nodes, p):
            pos, h = self.trajectories(nodes, times)
            dens = p(nodes)
            out = np.empty((len(nodes), len(times) * m))
            for j, phi in enumerate(family):
                out[:, j::m] = (dens[None, :] * h * phi(pos)).T
            return out

        for p in panels:
            a, b = max(p.lo, lo_s), min(p.hi, hi_s)
            v, e = integrate_vector(lambda y, p=p: integrand(y, p), a, b, tol=share,
                                    breakpoints=p.breaks, initial_panels=max(4, int(self.panel_density * (b - a))))
            vals += v.reshape(len(times), m)
            errs += e.reshape(len(times), m)
        start = [i for i, t in enumerate(times) if t == 0.0]
        if start:
            # the initial row is the datum itself, not a pulled-back quadrature of it
            vals[start], errs[start] = pair_many(self.u0, family, tol)
        return vals, errs

    def to_json(self, times=None):
        from .pairing import default_family, pairing_table

        times = self.times if times is None else times
        table = pairing_table(self, default_family(), times)
        return {"provenance": self.provenance, "T": self.T, "kind": "pairing-only",
                "pairings": table.to_json()}


class PulledBackState:
    """A time slice of a :class:`PullbackSolution`, usable in :func:`pair`."""

    def __init__(self, solution, t):
        self.solution = solution
        self.t = t

    def pair(self, g, tol=1e-10):
        v, e = self.solution.pairing_matrix([g], [self.t], tol)
        return float(v[0, 0]), float(e[0, 0])

    def pair_family(self, tests, tol=1e-10):
        v, e = self.solution.pairing_matrix(tests, [self.t], tol)
        return v[0], e[0]

    def to_json(self):
        return {"t": self.t, "kind": "pairing-only"}

# }}}


# {{{ solvers

def _exact_capable(coeff):
    return getattr(coeff, "is_piecewise_constant", False) and coeff.has_affine_curves


def poupaud_rascle_solve(coeff, u0, T, times=None):
    """Pushforward ``u(t) = chi_F(t, .)_# u0``."""
    if _exact_capable(coeff):
        flow = ExactFlowMap(coeff, T, np.linspace(-3, 3, 61))
        return MeasureSolution(lambda t: pushforward_exact(flow, u0, t), T, "poupaud-rascle",
                               coeff, u0, times)
    xs = [x for x, _ in u0.atoms] or [0.0]
    if not math.isfinite(_forward_unique(coeff, T, xs)):
        raise ForwardUniquenessViolated("one-sided Lipschitz estimate is +inf on the window")
    method = "caratheodory" if coeff.is_continuous() else "filippov"
    return PullbackSolution(coeff, u0, T, "poupaud-rascle", method=method, times=times)


def caratheodory_solve(coeff_a, coeff_b, u0, T, times=None, rtol=1e-11, atol=1e-12):
    """``<u(t), phi> = <u0, phi(chi(t,.)) h_b(t,.)>`` for continuous coefficients."""
    if not coeff_a.is_continuous():
        raise NotApplicable("coefficient a is discontinuous in x")
    if coeff_b is not None and not coeff_b.is_continuous():
        raise NotApplicable("coefficient b is discontinuous in x")
    return PullbackSolution(coeff_a, u0, T, "caratheodory", b=coeff_b, times=times,
                            rtol=rtol, atol=atol)


def bouchut_james_solve(coeff, u0, T, times=None):
    """Solution with the prescribed on-curve representative (conditions checked first)."""
    from .applicability import bouchut_james_conditions

    for cond in bouchut_james_conditions(coeff, T):
        if not cond.ok:
            raise ConditionViolated(cond.condition, cond.evidence)
    try:
        pr = poupaud_rascle_solve(coeff, u0, T, times)
    except ForwardUniquenessViolated as exc:
        raise NotApplicable(f"no forward-unique flow: {exc}") from None
    if isinstance(pr, PullbackSolution):
        pr.provenance = "bouchut-james"
        return pr
    return MeasureSolution(pr._state_fn, T, "bouchut-james", coeff, u0, times)

# }}}


# {{{ weak residuals

def product_state(product, coeff, sol, t):
    """The product ``a * u(t)`` as a measure state for one of three products."""
    from .products import diamond_product, model_product_rule, pr_velocity_state

    if product == "diamond":
        return diamond_product(coeff, sol.state(t), t)
    if product == "model":
        return model_product_rule(coeff, sol.state(t), t)
    if product == "pr":
        return pr_velocity_state(coeff, sol, t)
    raise ValueError(f"unknown product {product!r}")


def _derivative_measure(state):
    """Distributional derivative of a density-only state (jumps become atoms)."""
    if state.atoms:
        raise ValueError("advective form needs a state without atoms")
    atoms = []
    panels = []
    edges = {}
    for p in state.panels:
        if math.isfinite(p.lo):
            edges[p.lo] = edges.get(p.lo, 0.0) + float(p(p.lo))
        if math.isfinite(p.hi):
            edges[p.hi] = edges.get(p.hi, 0.0) - float(p(p.hi))
        if not p.is_constant:
            h = 1e-5
            d = lambda y, p=p: (p(y + h) - p(y - h)) / (2 * h)
            panels.append(DensityPanel(p.lo, p.hi, d, p.breaks))
    atoms = [(x, w) for x, w in edges.items() if abs(w) > 1e-14]
    return MeasureState(state.t, merge_atoms(atoms), tuple(panels))


def weak_residual(sol, form="conservative", product="diamond", family=None, tol=1e-10):
    """Residual ``-<u, d_t phi> - <a * u, d_x phi>`` per space-time test.

    The advective form replaces the flux term by ``<a * d_x u, phi>``.
    Space-time pairings are time quadratures of spatial pairings.
    """
    coeff = sol.coefficient
    family = default_space_time_family(sol.T) if family is None else family
    slabs = []
    for phi in family:
        if phi.time not in slabs:
            slabs.append(phi.time)
    spaces = []
    for phi in family:
        if phi.space not in spaces:
            spaces.append(phi.space)
    dspaces = [s.derivative() for s in spaces]
    si = np.array([slabs.index(phi.time) for phi in family])
    sj = np.array([spaces.index(phi.space) for phi in family])
    dslabs_pairs = (slabs, [tau.derivative() for tau in slabs])

    def integrand(ts):
        rows = []
        for t in ts:
            st = sol.state(t)
            val = pair_many(st, spaces, tol)[0]
            if form == "conservative":
                flux = product_state(product, coeff, sol, t)
                other = pair_many(flux, dspaces, tol)[0]
            elif form == "advective":
                from .products import diamond_product, model_product_rule

                du = _derivative_measure(st)
                rule = diamond_product if product == "diamond" else model_product_rule
                other = pair_many(rule(coeff, du, t), spaces, tol)[0]
            else:
                raise ValueError(f"unknown form {form!r}")
            w = np.array([tau(t) for tau in dslabs_pairs[0]])
            dw = np.array([tau(t) for tau in dslabs_pairs[1]])
            sign = -1.0 if form == "conservative" else 1.0
            rows.append(-dw[si] * val[sj] + sign * w[si] * other[sj])
        return np.array(rows)

    lo = min(s.support[0] for s in slabs)
    hi = max(s.support[1] for s in slabs)
    cuts = sorted({v for s in slabs for v in (*s.support, s.center)})
    values, errors = integrate_vector(integrand, max(lo, 0.0), min(hi, sol.T), tol=tol,
                                      breakpoints=cuts)
    table = PairingTable()
    for phi, v, e in zip(family, values, errors):
        table.add(phi, phi.time.center, v, e)
    return table

# }}}
