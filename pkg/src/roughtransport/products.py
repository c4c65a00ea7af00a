"""Non-classical products: model product, diamond product, flow product."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ForwardUniquenessViolated, NotSolutionPair, PrescribedMissing
from .expr import Expr
from .measures import DensityPanel, MeasureState, merge_atoms
from .pairing import (FunctionOnSupport, pair_many, PairingTable, default_family,
                      default_space_time_family, distribution_distance)
from .profiles import DEFAULT_PROFILES
from .quadrature import NODES, KRONROD_WEIGHTS, integrate, integrate_vector

DEFINED, NOT_EXISTS, UNDEFINED = "defined", "not-exists", "undefined-for-inputs"
DEFAULT_LADDER = tuple(2.0 ** -j for j in range(3, 11))


@dataclass
class ProductResult:
    status: str
    value: object = None
    diagnostics: dict = field(default_factory=dict)
    identified: str | None = None

    def to_json(self):
        value = self.value
        if isinstance(value, PairingTable):
            value = value.to_json()
        elif isinstance(value, MeasureState):
            value = value.to_json()
        return {"status": self.status, "identified": self.identified, "value": value,
                "diagnostics": self.diagnostics}

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)


# {{{ pointwise-type products

def _curve_index(coeff, t, x):
    for j, xi in enumerate(coeff.curve_positions(t)):
        if abs(x - xi) <= 1e-12 * max(1.0, abs(x)):
            return j
    return None


def _times_coefficient(coeff, state, t):
    """Density panels multiplied by the coefficient pieces (split at curves)."""
    panels = []
    cuts = list(coeff.curve_positions(t))
    for p in state.panels:
        # cuts within rounding of a panel edge are the edge itself
        inner = [c for c in cuts
                 if p.lo + 1e-12 * max(1.0, abs(c)) < c < p.hi - 1e-12 * max(1.0, abs(c))]
        edges = [p.lo, *inner, p.hi]
        for a, b in zip(edges[:-1], edges[1:]):
            mid = b - 1.0 if math.isinf(a) else (a + 1.0 if math.isinf(b) else 0.5 * (a + b))
            breaks = tuple(v for v in p.breaks if a < v < b)
            if hasattr(coeff, "pieces"):
                piece = coeff.pieces[int(coeff.region(t, mid))].at_time(t)
                if p.is_expr:
                    dens = p.density.times(piece)
                    if dens.is_constant:
                        dens = Expr(repr(dens.constant_value()))
                else:
                    dens = lambda y, p=p, piece=piece: p(y) * piece(0.0, y)
            else:
                dens = lambda y, p=p: p(y) * coeff(t, y)
            panels.append(DensityPanel(a, b, dens, breaks))
    return tuple(panels)


def diamond_product(coeff, u, t=None):
    """``a <> u``: atoms take the prescribed on-curve value, densities multiply pointwise."""
    t = u.t if t is None else float(t)
    atoms = []
    for x, w in u.atoms:
        j = _curve_index(coeff, t, x)
        if j is None:
            atoms.append((x, w * float(coeff(t, x))))
        elif j in coeff.prescribed:
            atoms.append((x, w * coeff.prescribed[j](t, 0.0)))
        else:
            raise PrescribedMissing(f"atom at x={x:g} sits on curve {j} without a prescribed value")
    return MeasureState(t, merge_atoms(atoms), _times_coefficient(coeff, u, t))


def model_product_rule(coeff, u, t=None):
    """Closed form of ``[a . u]`` for piecewise-smooth ``a`` and atoms-plus-density ``u``.

    An atom on a jump receives the mean of the two limits (the common
    mollifier sends ``(H * rho_eps)(rho_eps)`` to half the atom); everything
    else is pointwise multiplication.
    """
    t = u.t if t is None else float(t)
    atoms = []
    for x, w in u.atoms:
        j = _curve_index(coeff, t, x)
        if j is None:
            atoms.append((x, w * float(coeff(t, x))))
        else:
            a, b = coeff.limits(j, t)
            atoms.append((x, w * 0.5 * (a + b)))
    return MeasureState(t, merge_atoms(atoms), _times_coefficient(coeff, u, t))

# }}}


# {{{ model product by regularization

def regularize(state, eps, profile):
    """``x -> (u * rho_eps)(x)`` for an atoms-plus-density state."""
    atoms = list(state.atoms)
    panels = list(state.panels)

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for xa, w in atoms:
            out += w * profile((x - xa) / eps) / eps
        for p in panels:
            if p.is_constant:
                c = p.density.constant_value()
                out += c * (profile.cdf((x - p.lo) / eps) - profile.cdf((x - p.hi) / eps))
            else:
                out += _convolve_panel(p, x, eps, profile)
        return out

    return fn


def _convolve_panel(p, x, eps, profile):
    # integral over z of rho(z) d(x - eps z) restricted to the panel
    sub = profile.quad_panels
    zlo = np.clip((x - p.hi) / eps, -1.0, 1.0)
    zhi = np.clip((x - p.lo) / eps, -1.0, 1.0)
    total = np.zeros_like(x)
    edges = np.linspace(0.0, 1.0, sub + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        lo = zlo + a * (zhi - zlo)
        hi = zlo + b * (zhi - zlo)
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        z = mid[:, None] + half[:, None] * NODES[None, :]
        vals = profile(z) * p(x[:, None] - eps * z)
        total += half * (vals * KRONROD_WEIGHTS).sum(axis=1)
    return total


def _ladder_fit(eps, values):
    """Least-squares fit ``v ~ c0 + c1*eps + c2*eps^2``; returns ``c0``.

    The curvature term absorbs the profile-dependent second-moment error,
    which an affine fit would leave in the limit.
    """
    A = np.vstack([np.ones_like(eps), eps, eps * eps]).T
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    return coef[0]


def _log_slope(eps, mags):
    mags = np.maximum(np.asarray(mags), 1e-300)
    A = np.vstack([np.ones_like(eps), np.log(1.0 / eps)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(mags), rcond=None)
    return float(coef[1])


def model_product(u, v, family=None, ladder=DEFAULT_LADDER, profiles=DEFAULT_PROFILES,
                  tol=1e-4, candidates=None, fit_rungs=4, growth_threshold=0.5, jobs=1):
    """``[u . v] = lim (u * rho_eps)(v * rho_eps)`` tested against a family.

    The limit is taken by a quadratic fit in ``eps`` over the last rungs, for
    two profiles.  Growth of the pairings along the ladder with log-log slope
    at least ``growth_threshold``, or disagreement between profiles above
    ``tol``, means the product does not exist.
    """
    family = default_family() if family is None else family
    eps = np.asarray(sorted(ladder, reverse=True), dtype=float)
    pts = sorted(set(u.breakpoints()) | set(v.breakpoints()))

    def rung(profile, e):
        fu, fv = regularize(u, e, profile), regularize(v, e, profile)
        cuts = sorted({c + s * e for c in pts for s in (-1.0, 0.0, 1.0)})
        row = []
        for phi in family:
            lo, hi = phi.support
            val, _ = integrate(lambda y: fu(y) * fv(y) * phi(y), lo, hi, tol=1e-12,
                               breakpoints=cuts)
            row.append(val)
        return row

    jobs_list = [(prof, e) for prof in profiles for e in eps]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(jobs) as pool:
            rows = list(pool.map(lambda pe: rung(*pe), jobs_list))
    else:
        rows = [rung(*pe) for pe in jobs_list]
    table = np.array(rows).reshape(len(profiles), len(eps), len(family))
    tail = slice(len(eps) - fit_rungs, len(eps))
    limits = np.array([[_ladder_fit(eps[tail], table[p, tail, k]) for k in range(len(family))]
                       for p in range(len(profiles))])
    slopes = [_log_slope(eps[tail], np.max(np.abs(table[p, tail, :]), axis=1))
              for p in range(len(profiles))]
    spread = float(np.max(np.abs(limits[0] - limits[-1])))
    diagnostics = {
        "eps": eps.tolist(),
        "profiles": [p.name for p in profiles],
        "pairings": table.tolist(),
        "limits": limits.tolist(),
        "growth_slope": max(slopes),
        "profile_spread": spread,
        "tolerance": tol,
    }
    if max(slopes) >= growth_threshold:
        diagnostics["reason"] = "pairings grow along the ladder"
        return ProductResult(NOT_EXISTS, None, diagnostics)
    if spread > tol:
        diagnostics["reason"] = "limits depend on the mollifier profile"
        return ProductResult(NOT_EXISTS, None, diagnostics)
    mean = limits.mean(axis=0)
    out = PairingTable()
    for phi, val in zip(family, mean):
        out.add(phi, u.t, val, spread)
    identified = None
    for name, cand in (candidates or {}).items():
        ref = pair_many(cand, family)[0]
        diagnostics.setdefault("candidate_distance", {})[name] = float(np.max(np.abs(ref - mean)))
        if np.max(np.abs(ref - mean)) <= tol and identified is None:
            identified = name
    return ProductResult(DEFINED, out, diagnostics, identified)

# }}}


# {{{ flow product

def pr_velocity_state(coeff, sol, t):
    """``(a . u)(t)``: the velocity-weighted pushforward of the initial datum."""
    from .transport import PullbackSolution, pushforward_exact
    from .flows import ExactFlowMap

    if isinstance(sol, PullbackSolution):
        return _WeightedPullback(sol, t)
    flow = sol.__dict__.setdefault("_exact_flow", ExactFlowMap(coeff, sol.T, [0.0]))
    return pushforward_exact(flow, sol.u0, t, velocity_weighted=True)


class _WeightedPullback:
    """``g -> <u0, a(t, chi) g(chi)>`` for continuous coefficients on the numeric path."""

    def __init__(self, sol, t):
        self.sol, self.t = sol, t

    def pair(self, g, tol=1e-10):
        return tuple(float(v[0]) for v in self.pair_family([g], tol))

    def pair_family(self, tests, tol=1e-10):
        a = self.sol.coefficient
        t = self.t
        weighted = [FunctionOnSupport(lambda y, g=g: a(t, y) * g(y), g.support) for g in tests]
        v, e = self.sol.pairing_matrix(weighted, [t], tol)
        return v[0], e[0]


def space_time_pairings(state_fn, family, T, tol=1e-10):
    """``int_0^T tau(t) <state_fn(t), psi> dt`` for each tensor test ``tau psi``."""
    spaces = []
    for phi in family:
        if phi.space not in spaces:
            spaces.append(phi.space)

    def integrand(ts):
        rows = []
        for t in ts:
            st = state_fn(float(t))
            vals = dict(zip(spaces, pair_many(st, spaces, tol)[0]))
            rows.append([phi.time(t) * vals[phi.space] for phi in family])
        return np.array(rows)

    cuts = sorted({v for phi in family for v in (*phi.time.support, phi.time.center)})
    lo = max(0.0, min(phi.time.support[0] for phi in family))
    hi = min(T, max(phi.time.support[1] for phi in family))
    return integrate_vector(integrand, lo, hi, tol=tol, breakpoints=cuts)


def pr_product(coeff, u0, T, family=None, u=None, candidates=None, tol=1e-6):
    """``<a . u, phi> = <u0, int_0^T d_t chi_F phi(t, chi_F) dt>`` for the flow solution ``u``.

    ``u`` (optional) is the claimed second factor; it must be the flow
    solution generated by ``(coeff, u(0))``.  ``candidates`` maps names to
    ``t -> MeasureState`` closed forms for identification.
    """
    from .transport import poupaud_rascle_solve

    sol = poupaud_rascle_solve(coeff, u0, T)
    family = default_space_time_family(T) if family is None else family
    diagnostics = {"T": T}
    if u is not None:
        check_times = [0.0, T / 4, T / 2, T]
        d = distribution_distance(u, sol, default_family(), times=check_times)
        diagnostics["solution_distance"] = d
        if d > 1e-8:
            raise NotSolutionPair(
                f"second factor is not the flow solution of its own initial datum (distance {d:.3g})")
    vals, errs = space_time_pairings(lambda t: pr_velocity_state(coeff, sol, t), family, T)
    table = PairingTable()
    for phi, v, e in zip(family, vals, errs):
        table.add(phi, phi.time.center, v, e)
    identified = None
    for name, cand in (candidates or {}).items():
        ref, _ = space_time_pairings(cand, family, T)
        dist = float(np.max(np.abs(ref - vals)))
        diagnostics.setdefault("candidate_distance", {})[name] = dist
        if dist <= tol and identified is None:
            identified = name
    return ProductResult(DEFINED, table, diagnostics, identified)

# }}}
