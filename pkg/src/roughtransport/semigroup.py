"""Transport semigroup and resolvent for a time-independent ``0 < c0 <= a <= c1``.

Everything is computed in the travel-time coordinate ``s = A(x)`` with
``A(x) = int_0^x dy / a(y)``.  There the flow is a translation and the
resolvent ``v = R(mu) f`` solves ``V' + mu V = g`` with ``g = f o A^-1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundsViolated, NotAutonomous, OutsideDomain, TailBoundFailure
from .quadrature import KRONROD_WEIGHTS, NODES, integrate, integrate_vector, panel_nodes


class Indicator:
    """``1_[lo, hi]`` with its support and jump points."""

    def __init__(self, lo, hi):
        self.lo, self.hi = float(lo), float(hi)
        self.support = (self.lo, self.hi)
        self.breaks = (self.lo, self.hi)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= self.lo) & (x <= self.hi)).astype(float)


def _kinks(a):
    try:
        return tuple(float(v) for v in a.curve_positions(0.0))
    except AttributeError:
        return ()


class ResolventContext:
    """Tabulated travel time ``A`` and its inverse on a window."""

    def __init__(self, a, window, c0=None, c1=None, panels=2048):
        if not getattr(a, "is_autonomous", True):
            raise NotAutonomous("the semigroup needs a time-independent coefficient")
        self.a = a
        self.lo, self.hi = map(float, window)
        if not self.lo < 0.0 < self.hi:
            raise ValueError("the window must contain 0, where A vanishes")
        self.kinks = tuple(k for k in _kinks(a) if self.lo < k < self.hi)
        knots = np.unique(np.concatenate([np.linspace(self.lo, self.hi, panels + 1),
                                          [0.0], self.kinks]))
        self._check_bounds(knots, c0, c1)
        self.knots = knots
        local = self._local(knots[:-1], knots[1:])
        tab = np.concatenate([[0.0], np.cumsum(local)])
        self.table = tab - tab[np.searchsorted(knots, 0.0)]

    def _check_bounds(self, knots, c0, c1):
        xs = np.unique(np.concatenate([np.linspace(self.lo, self.hi, 8193), knots,
                                       [k + d for k in self.kinks for d in (-1e-9, 1e-9)]]))
        vals = self.coeff(xs)
        lo, hi = float(vals.min()), float(vals.max())
        if c0 is None or c1 is None:
            declared = getattr(self.a, "bounds", None)
            if declared is not None:
                c0 = declared[0] if c0 is None else c0
                c1 = declared[1] if c1 is None else c1
        c0 = lo if c0 is None else float(c0)
        c1 = hi if c1 is None else float(c1)
        if not c0 > 0.0:
            raise BoundsViolated(f"lower bound c0={c0:g} must be positive")
        if lo < c0 or hi > c1:
            raise BoundsViolated(f"sampled a in [{lo:g}, {hi:g}] leaves [{c0:g}, {c1:g}]")
        self.c0, self.c1 = c0, c1

    def coeff(self, x):
        return np.asarray(self.a(0.0, x), dtype=float)

    def _local(self, lo, hi):
        half = 0.5 * (hi - lo)
        z = (0.5 * (lo + hi))[..., None] + half[..., None] * NODES
        return (1.0 / self.coeff(z)) @ KRONROD_WEIGHTS * half

    @property
    def s_range(self):
        return float(self.table[0]), float(self.table[-1])

    def A(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise OutsideDomain("point outside the tabulated window")
        i = np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, len(self.knots) - 2)
        return self.table[i] + self._local(self.knots[i], x)

    def A_inv(self, s):
        s = np.asarray(s, dtype=float)
        s0, s1 = self.s_range
        if np.any(s < s0 - 1e-12) or np.any(s > s1 + 1e-12):
            raise OutsideDomain("travel time outside the tabulated window")
        i = np.clip(np.searchsorted(self.table, s, side="right") - 1, 0, len(self.knots) - 2)
        a_, b_ = self.knots[i].copy(), self.knots[i + 1].copy()
        span = self.table[i + 1] - self.table[i]
        x = a_ + (b_ - a_) * np.clip((s - self.table[i]) / span, 0.0, 1.0)
        for _ in range(60):
            res = self.table[i] + self._local(self.knots[i], x) - s
            a_ = np.where(res <= 0, x, a_)
            b_ = np.where(res > 0, x, b_)
            step = x - res * self.coeff(x)
            new = np.where((step >= a_) & (step <= b_), step, 0.5 * (a_ + b_))
            if np.all(np.abs(new - x) <= 1e-15 * (1.0 + np.abs(x))):
                return new
            x = new
        return x

    def flow(self, t, x):
        """``chi(t, x) = A^-1(A(x) + t)``."""
        return self.A_inv(self.A(x) + t)

    def norm(self, f, lo=None, hi=None, tol=1e-12):
        """``||f||_0`` on ``[lo, hi]`` (the window by default)."""
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        sup = getattr(f, "support", None)
        if sup is not None:
            lo, hi = max(lo, sup[0]), min(hi, sup[1])
        cuts = [b for b in (*self.kinks, *getattr(f, "breaks", ())) if lo < b < hi]
        val, _ = integrate(lambda x: np.abs(f(x)) ** 2, lo, hi, tol=tol, breakpoints=cuts)
        return math.sqrt(max(val, 0.0))


def build_context(a, window=(-4.0, 60.0), c0=None, c1=None):
    return ResolventContext(a, window, c0, c1)


class Transported:
    """``x -> f(chi(-t, x))``; points whose backward path leaves the window raise."""

    def __init__(self, ctx, t, f):
        self.ctx, self.t, self.f = ctx, float(t), f
        self.breaks = tuple(float(ctx.flow(t, b)) for b in getattr(f, "breaks", ())
                            if ctx.A(b) + t <= ctx.s_range[1])
        sup = getattr(f, "support", None)
        if sup is not None:
            s1 = ctx.s_range[1]
            lo = float(ctx.A_inv(min(ctx.A(max(sup[0], ctx.lo)) + t, s1)))
            hi = float(ctx.A_inv(min(ctx.A(min(sup[1], ctx.hi)) + t, s1)))
            self.support = (lo, hi)

    def __call__(self, x):
        s = self.ctx.A(x) - self.t
        s0 = self.ctx.s_range[0]
        sup = getattr(self.f, "support", None)
        if np.any(s < s0):
            # a foot left of the window is harmless when f vanishes there
            if sup is None or sup[0] < self.ctx.lo:
                raise OutsideDomain("backward characteristic leaves the window")
            return np.where(s < s0, 0.0, self.f(self.ctx.A_inv(np.maximum(s, s0))))
        return self.f(self.ctx.A_inv(s))


def semigroup_apply(ctx, t, u0):
    """``Sigma_t u0 = u0(chi(-t, .))``."""
    if t < 0:
        raise ValueError("the semigroup is defined for t >= 0")
    return Transported(ctx, t, u0)


# -- resolvent ----------------------------------------------------------------------

class HermiteGrid:
    """Piecewise cubic Hermite function with one-sided end slopes per panel."""

    def __init__(self, s, values, d_left, d_right):
        self.s = s
        self.values = values
        self.d_left = d_left
        self.d_right = d_right

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        i = np.clip(np.searchsorted(self.s, q, side="right") - 1, 0, len(self.s) - 2)
        h = self.s[i + 1] - self.s[i]
        u = (q - self.s[i]) / h
        u2, u3 = u * u, u * u * u
        h00 = 2 * u3 - 3 * u2 + 1
        h10 = u3 - 2 * u2 + u
        h01 = -2 * u3 + 3 * u2
        h11 = u3 - u2
        out = (h00 * self.values[i] + h10 * h * self.d_left[i]
               + h01 * self.values[i + 1] + h11 * h * self.d_right[i])
        # zero left of the grid (no support) and right of it (certified tail)
        return np.where(q > self.s[-1], 0.0, np.where(q < self.s[0], 0.0, out))


@dataclass
class ResolventIterate:
    """``x -> (R(mu)^k f)(x)`` with its grid in travel-time coordinates."""

    ctx: ResolventContext
    mu: complex
    k: int
    grid: HermiteGrid
    tail: float
    weights: np.ndarray

    def __call__(self, x):
        return self.grid(self.ctx.A(x))

    def norm(self):
        """``||v||_0`` as ``int |V(s)|^2 a(A^-1(s)) ds`` over the grid panels."""
        g = self.grid
        nodes = panel_nodes(g.s[:-1], g.s[1:])
        vals = np.abs(g(nodes)) ** 2
        half = 0.5 * np.diff(g.s)
        return math.sqrt(float(np.sum((vals * self.weights) @ KRONROD_WEIGHTS * half)))


def _s_grid(ctx, f, panels):
    s0, s1 = ctx.s_range
    marks = [float(ctx.A(b)) for b in (*ctx.kinks, *getattr(f, "breaks", ()))
             if ctx.lo < b < ctx.hi]
    return np.unique(np.concatenate([np.linspace(s0, s1, panels + 1), marks]))


def _step(grid_s, mu, g_nodes, g_left, g_right, v0=0.0):
    """March ``V' = g - mu V`` across the panels with the exponential integrator."""
    h = np.diff(grid_s)
    half = 0.5 * h
    r = (1.0 + NODES)[None, :] * half[:, None]
    kernel = np.exp(-mu * (h[:, None] - r))
    incr = (kernel * g_nodes) @ KRONROD_WEIGHTS * half
    decay = np.exp(-mu * h)
    values = np.empty(len(grid_s), dtype=complex)
    values[0] = v0
    for i in range(len(h)):
        values[i + 1] = decay[i] * values[i] + incr[i]
    d_left = g_left - mu * values[:-1]
    d_right = g_right - mu * values[1:]
    return values, d_left, d_right


def resolvent_iterates(ctx, mu, f, k=1, tol=1e-10, panels=8192):
    """``[R(mu) f, ..., R(mu)^k f]`` for ``Re mu > 0`` by exact-exponential marching.

    The window must leave room for the backward horizon ``Z`` behind the
    support of ``f``; each iterate's value at the right end of the window is
    its truncation defect and must stay below ``tol``.
    """
    mu = complex(mu)
    if not mu.real > 0:
        raise ValueError("the resolvent needs Re mu > 0")
    if k < 1:
        raise ValueError("k must be at least one")
    sup = getattr(f, "support", (ctx.lo, ctx.hi))
    if sup[0] < ctx.lo:
        raise TailBoundFailure("support of f starts left of the window")
    grid_s = _s_grid(ctx, f, panels)
    x_knots = ctx.A_inv(grid_s)
    nodes_s = panel_nodes(grid_s[:-1], grid_s[1:])
    x_nodes = ctx.A_inv(nodes_s.ravel()).reshape(nodes_s.shape)
    weights = ctx.coeff(x_nodes)
    f_nodes = np.asarray(f(x_nodes), dtype=float)
    fmax = float(np.max(np.abs(f_nodes)))
    if fmax > 0:
        horizon = math.log(max(fmax / (tol * mu.real), 1.0)) / mu.real
        room = ctx.s_range[1] - float(ctx.A(min(sup[1], ctx.hi)))
        if room < horizon:
            raise TailBoundFailure(f"window leaves {room:.3g} of travel time, {horizon:.3g} needed")
    nudge = 1e-13 * (1.0 + np.abs(x_knots))
    g_nodes = f_nodes.astype(complex)
    g_left = f(np.minimum(x_knots[:-1] + nudge[:-1], ctx.hi)).astype(complex)
    g_right = f(np.maximum(x_knots[1:] - nudge[1:], ctx.lo)).astype(complex)
    out = []
    for j in range(1, k + 1):
        values, dl, dr = _step(grid_s, mu, g_nodes, g_left, g_right)
        grid = HermiteGrid(grid_s, values, dl, dr)
        tail = float(abs(values[-1]))
        if tail > tol:
            raise TailBoundFailure(f"iterate {j} is {tail:.3g} at the right end of the window")
        out.append(ResolventIterate(ctx, mu, j, grid, tail, weights))
        g_nodes = grid(nodes_s)
        g_left, g_right = values[:-1], values[1:]
    return out


def resolvent(ctx, mu, f, k=1, tol=1e-10, panels=8192):
    """``R(mu)^k f``; see :func:`resolvent_iterates`."""
    return resolvent_iterates(ctx, mu, f, k, tol, panels)[-1]


def weak_residual(ctx, mu, v, f, family, tol=1e-10):
    """``-int v psi' + int (mu v - f)/a psi`` for each test ``psi``."""
    out = []
    for psi in family:
        lo, hi = psi.support
        lo, hi = max(lo, ctx.lo), min(hi, ctx.hi)
        cuts = [b for b in (*ctx.kinks, *getattr(f, "breaks", ())) if lo < b < hi]
        dpsi = psi.derivative()

        def integrand(x):
            vx = v(x)
            return np.stack([(-vx * dpsi(x) + (mu * vx - f(x)) / ctx.coeff(x) * psi(x)).real,
                             (-vx * dpsi(x) + (mu * vx - f(x)) / ctx.coeff(x) * psi(x)).imag],
                            axis=-1)

        val, _ = integrate_vector(integrand, lo, hi, tol=tol, breakpoints=cuts)
        out.append(complex(val[0], val[1]))
    return np.array(out)


def laplace_value(ctx, mu, f, x, horizon=None, tol=1e-12):
    """``int_0^Z e^{-mu t} f(chi(-t, x)) dt`` by adaptive quadrature in ``t``."""
    mu = complex(mu)
    sx = float(ctx.A(x))
    s0 = ctx.s_range[0]
    zmax = sx - s0 if horizon is None else min(horizon, sx - s0)
    cuts = [sx - float(ctx.A(b)) for b in (*ctx.kinks, *getattr(f, "breaks", ()))
            if ctx.lo < b < ctx.hi]
    cuts = [c for c in cuts if 0.0 < c < zmax]

    def integrand(t):
        vals = np.exp(-mu * t) * f(ctx.A_inv(sx - t))
        return np.stack([vals.real, vals.imag], axis=-1)

    from .quadrature import integrate_vector
    val, _ = integrate_vector(integrand, 0.0, zmax, tol=tol, breakpoints=cuts)
    return complex(val[0], val[1])


@dataclass
class BoundRow:
    mu: complex
    k: int
    lhs: float
    rhs: float

    @property
    def passed(self):
        return self.lhs <= self.rhs

    def to_json(self):
        return {"mu_re": self.mu.real, "mu_im": self.mu.imag, "k": self.k, "lhs": self.lhs,
                "rhs": self.rhs, "pass": self.passed}


def resolvent_power_bound(ctx, mu, k, f, tol=1e-8, resolvent_tol=1e-10):
    """``||R(mu)^k f|| <= sqrt(c1/c0) ||f|| / Re(mu)^k`` (plus ``tol``)."""
    mu = complex(mu)
    nf = ctx.norm(f)
    if k == 0:
        return BoundRow(mu, 0, nf, nf + tol)
    lhs = resolvent(ctx, mu, f, k, tol=resolvent_tol).norm()
    rhs = math.sqrt(ctx.c1 / ctx.c0) * nf / mu.real ** k + tol
    return BoundRow(mu, int(k), lhs, rhs)


def bound_table(ctx, f, mus=(1.0, 2.0, 1 + 1j), ks=range(1, 6), tol=1e-8):
    ks = list(ks)
    nf = ctx.norm(f)
    factor = math.sqrt(ctx.c1 / ctx.c0)
    rows = []
    for mu in mus:
        mu = complex(mu)
        iterates = resolvent_iterates(ctx, mu, f, max(ks))
        for k in ks:
            rows.append(BoundRow(mu, int(k), iterates[k - 1].norm(),
                                 factor * nf / mu.real ** k + tol))
    return rows


def write_bound_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mu_re", "k", "lhs", "rhs", "pass", "mu_im"])
        for r in rows:
            w.writerow([repr(r.mu.real), r.k, repr(r.lhs), repr(r.rhs), int(r.passed),
                        repr(r.mu.imag)])


def homogeneous_norms(ctx, mu, lefts, right=0.0):
    """``||exp(-mu A)||`` on ``[left, right]``: unbounded as ``left`` decreases."""
    mu = complex(mu)
    w = lambda x: np.exp(-mu * ctx.A(x))
    return [ctx.norm(w, left, right) for left in lefts]
