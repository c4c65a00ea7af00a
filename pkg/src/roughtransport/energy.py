"""L2 energy bounds for ``P = d/dt + a d/dx + c`` and the Garding probe."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .colombeau import GrowthFit, growth_fit
from .errors import NotDifferentiable
from .flows import solve_vector
from .profiles import POLY_BUMP, l2_unit
from .quadrature import integrate, panel_nodes, KRONROD_WEIGHTS

PROBE_PROFILE = l2_unit(POLY_BUMP)
PROBE_LADDER = tuple(2.0 ** -j for j in range(3, 11))


def _as_coeff_fn(c):
    """Turn ``None``, a number or a coefficient into ``(t, x) -> array``."""
    if c is None:
        return lambda t, x: np.zeros(np.shape(x))
    if isinstance(c, (int, float)):
        return lambda t, x: np.full(np.shape(x), float(c))
    return c


def _slope(a, t, x):
    d = getattr(a, "derivative", None)
    if d is not None:
        return np.asarray(d(t, x, 1), dtype=float)
    return np.asarray(a.dx(t, x), dtype=float)


def _check_differentiable(a, t, window):
    lo, hi = window
    curves = getattr(a, "curves", ())
    if not curves:
        return
    for xi, jump in zip(a.curve_positions(t), a.jumps(t)):
        if lo <= xi <= hi and abs(jump) > 0.0:
            raise NotDifferentiable(f"jump of size {jump:g} at x={xi:g} inside the window")


def h_function(a, c=None, t=0.0, window=(-4.0, 4.0), level=12, max_level=20, rtol=1e-6):
    """``sup |a_x/2 - c|`` over the window, sampled on dyadic grids.

    The grid is doubled until two successive levels agree to ``rtol``.
    """
    _check_differentiable(a, t, window)
    cf = _as_coeff_fn(c)
    lo, hi = map(float, window)

    def sup_at(n):
        x = np.linspace(lo, hi, 2 ** n + 1)
        return float(np.max(np.abs(0.5 * _slope(a, t, x) - cf(t, x))))

    prev = sup_at(level)
    for n in range(level + 1, max_level + 1):
        cur = sup_at(n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return max(cur, prev)
        prev = max(prev, cur)
    return prev


@dataclass
class EnergyReport:
    times: tuple
    norms: tuple
    h: tuple
    lam: tuple
    forcing: tuple
    rhs: tuple
    margin: tuple

    @property
    def min_margin(self):
        return float(min(self.margin))

    def passed(self, tol=1e-8):
        return self.min_margin >= -tol

    def to_json(self):
        return {k: [float(v) for v in getattr(self, k)]
                for k in ("times", "norms", "h", "lam", "forcing", "rhs", "margin")}

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def to_csv(self, path):
        cols = ("times", "norms", "h", "lam", "forcing", "rhs", "margin")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "norm", "h", "lambda", "forcing", "bound", "margin"])
            for row in zip(*(getattr(self, k) for k in cols)):
                w.writerow([repr(float(v)) for v in row])


def _start_nodes(u0, window, subpanels):
    if u0.atoms:
        raise ValueError("energy checks need a square-integrable datum (no atoms)")
    edges = set()
    for p in u0.panels:
        lo, hi = p.lo, p.hi
        if window is not None:
            lo, hi = max(lo, window[0]), min(hi, window[1])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("unbounded density panel: pass a finite window")
        if hi <= lo:
            continue
        edges.update(np.linspace(lo, hi, subpanels + 1).tolist())
        edges.update(b for b in p.breaks if lo < b < hi)
    if window is not None:
        edges.update(np.linspace(window[0], window[1], subpanels + 1).tolist())
    edges = np.array(sorted(edges))
    nodes = panel_nodes(edges[:-1], edges[1:])
    weights = (0.5 * np.diff(edges))[:, None] * KRONROD_WEIGHTS[None, :]
    return nodes.ravel(), weights.ravel()


def energy_check(a, u0=None, T=None, c=None, f=None, times=None, window=None,
                 subpanels=64, rtol=1e-11, atol=1e-13):
    """Track ``||u(t)||`` along characteristics and test the energy bound.

    ``a`` may be a regularized solution object, in which case its coefficient,
    datum and horizon are used.  Norms are taken over the image of the start
    region under the flow, where the same integration-by-parts identity holds.
    """
    if u0 is None and hasattr(a, "u0"):
        a, u0, T = a.coefficient, a.u0, a.T
    times = np.linspace(0.0, T, 11) if times is None else np.asarray(times, dtype=float)
    cf = _as_coeff_fn(c)
    ff = _as_coeff_fn(f)
    x0, w0 = _start_nodes(u0, window, subpanels)
    n = len(x0)

    def rhs(s, y):
        x, u = y[:n], y[2 * n:]
        return np.concatenate([a(s, x), _slope(a, s, x), ff(s, x) - cf(s, x) * u])

    y0 = np.concatenate([x0, np.zeros(n), u0.density_at(x0)])
    order = np.argsort(times)
    traj = solve_vector(rhs, y0, times[order], rtol, atol)
    traj[times[order] == 0.0] = y0
    inv = np.argsort(order)
    traj = traj[inv]
    pos, jac, vals = traj[:, :n], np.exp(traj[:, n:2 * n]), traj[:, 2 * n:]
    norms = np.sqrt(np.sum(w0 * vals ** 2 * jac, axis=1))
    forcing = np.array([math.sqrt(float(np.sum(w0 * ff(t, p) ** 2 * j)))
                        for t, p, j in zip(times, pos, jac)])
    hull = (float(pos.min()), float(pos.max()))
    autonomous = getattr(a, "is_autonomous", False) and (c is None or isinstance(c, (int, float))
                                                         or getattr(c, "is_autonomous", False))
    if autonomous:
        h0 = h_function(a, c, 0.0, hull)
        hs = np.full(len(times), h0)
        lam = 2.0 * h0 * times
    else:
        dense = np.union1d(np.linspace(0.0, float(times.max()), 129), times)
        hd = np.array([h_function(a, c, t, hull) for t in dense])
        lam_d = 2.0 * cumulative_trapezoid(hd, dense, initial=0.0)
        hs = np.interp(times, dense, hd)
        lam = np.interp(times, dense, lam_d)
    # forcing integral by trapezoid on the (sorted) node set
    ts = times[order]
    f_int = np.empty(len(times))
    f_int[order] = cumulative_trapezoid(forcing[order], ts, initial=0.0)
    rhs_vals = np.exp(0.5 * lam) * (norms[times == times.min()][0] + 2.0 * f_int)
    running = np.empty(len(times))
    running[order] = np.maximum.accumulate(norms[order])
    margin = rhs_vals - running
    return EnergyReport(tuple(times), tuple(norms), tuple(hs), tuple(lam), tuple(forcing),
                        tuple(rhs_vals), tuple(margin))


# -- Garding probe ---------------------------------------------------------------

def probe_value(a, eps, profile=PROBE_PROFILE, tol=1e-13):
    """``<a v', v>`` for ``v(x) = eps^-1/2 rho(x/eps)``.

    Written as ``(1/eps) int (a(eps z) - a(0)) rho'(z) rho(z) dz``; the
    constant ``a(0)`` drops out because ``int rho' rho = 0``.
    """
    a0 = float(a(0.0))
    cuts = [0.0] + [b / eps for b in getattr(a, "breaks", ()) if -1.0 < b / eps < 1.0]

    def integrand(z):
        return (np.asarray(a(eps * z), dtype=float) - a0) * profile.d1(z) * profile(z)

    # the difference a(eps z) - a(0) carries rounding noise of a few ulps of a(0)
    inner = max(tol * eps, 4e-16 * (1.0 + abs(a0)))
    val, _ = integrate(integrand, -1.0, 1.0, tol=inner, breakpoints=sorted(set(cuts)))
    return float(val) / eps


def probe_norm(eps, profile=PROBE_PROFILE):
    """``||v_eps||_0`` (one for every ``eps``)."""
    val, _ = integrate(lambda x: profile(x / eps) ** 2 / eps, -eps, eps, tol=1e-14)
    return math.sqrt(val)


@dataclass
class ProbeResult:
    eps: tuple
    values: tuple
    slope_vs_eps: float
    growth: float
    sign: int
    log_fit: GrowthFit

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "value"])
            for e, v in zip(self.eps, self.values):
                w.writerow([repr(float(e)), repr(float(v))])

    def to_json(self):
        return {"eps": list(self.eps), "values": list(self.values),
                "slope_vs_eps": self.slope_vs_eps, "growth": self.growth, "sign": self.sign,
                "log_fit": self.log_fit.to_json()}


def garding_probe(a, ladder=PROBE_LADDER, profile=PROBE_PROFILE, jobs=1):
    """Scaling of ``<a v_eps', v_eps>`` as ``eps -> 0``.

    ``slope_vs_eps`` is the slope of ``log|value|`` against ``log eps``;
    ``growth = -slope_vs_eps`` is the exponent of ``1/eps``.
    """
    eps = tuple(float(e) for e in ladder)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(jobs) as pool:
            values = tuple(pool.map(lambda e: probe_value(a, e, profile), eps))
    else:
        values = tuple(probe_value(a, e, profile) for e in eps)
    mags = np.abs(np.array(values))
    fit = growth_fit(eps, mags)
    last = values[-1]
    sign = int(np.sign(last))
    return ProbeResult(eps, values, -fit.exponent, fit.exponent, sign, fit)


class ProbeCoefficient:
    """A time-independent scalar coefficient for the probe, with known kinks."""

    def __init__(self, fn, breaks=(), name=""):
        self.fn = fn
        self.breaks = tuple(breaks)
        self.name = name

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def holder_coefficient(alpha=0.75):
    """``1 + x_+^alpha`` for ``x <= 1`` and ``2`` beyond."""

    def fn(x):
        xp = np.clip(x, 0.0, 1.0)
        out = 1.0 + np.power(xp, alpha)
        return np.where(x > 1.0, 2.0, out)

    return ProbeCoefficient(fn, (0.0, 1.0), f"1+x_+^{alpha}")


def lipschitz_control():
    """``1 + min(x_+, 1)``: Lipschitz with constant one."""
    return ProbeCoefficient(lambda x: 1.0 + np.clip(x, 0.0, 1.0), (0.0, 1.0), "1+min(x_+,1)")


def log_coefficient(profile=PROBE_PROFILE):
    """``-x log|x| rho(x)``."""

    def fn(x):
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -x * np.log(ax) * profile(x)
        return np.where(ax == 0.0, 0.0, out)

    return ProbeCoefficient(fn, (0.0,), "-x log|x| rho")
