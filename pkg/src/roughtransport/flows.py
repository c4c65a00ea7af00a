"""Characteristic flows: Caratheodory ODE flows and Filippov flows with sliding.

For piecewise-constant coefficients with affine jump curves the Filippov
flow is assembled exactly by an event tracker; every other case goes
through ``scipy.integrate.solve_ivp`` with event location on the curves.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (ForwardUniquenessViolated, NotApplicable, NotAutonomous, OutsideDomain,
                     StepFailure)
from .piecewise import one_sided_lipschitz_estimate
from .quadrature import KRONROD_WEIGHTS, NODES, panel_nodes

RTOL = 1e-12
ATOL = 1e-13
EVENT_TOL = 1e-12


# {{{ exact tracker

@dataclass(frozen=True)
class Phase:
    kind: str  # "region" or "slide"
    index: int
    t_start: float


class ExactTracker:
    """Exact Filippov trajectories for piecewise-constant pieces and affine curves."""

    def __init__(self, coeff):
        if not (coeff.is_piecewise_constant and coeff.has_affine_curves):
            raise ValueError("exact tracking needs constant pieces and affine curves")
        self.coeff = coeff
        self.speeds = np.array([p.constant_value() for p in coeff.pieces])
        self.offsets = np.array([c.affine[0] for c in coeff.curves])
        self.rates = np.array([c.affine[1] for c in coeff.curves])
        self.n = len(coeff.curves)
        for j in range(self.n):
            if self.speeds[j] < self.speeds[j + 1]:
                raise ForwardUniquenessViolated(
                    f"upward jump across curve {j}: characteristics emanate from it")

    def xi(self, j, t):
        return self.offsets[j] + self.rates[j] * t

    def _decide(self, j, came_from):
        rl = self.speeds[j] - self.rates[j]
        rr = self.speeds[j + 1] - self.rates[j]
        if came_from == "left":
            return ("region", j + 1) if rr > 0 else ("slide", j)
        if came_from == "right":
            return ("region", j) if rl < 0 else ("slide", j)
        if rl > 0 and rr > 0:
            return ("region", j + 1)
        if rl < 0 and rr < 0:
            return ("region", j)
        return ("slide", j)

    def _start(self, x):
        for j in range(self.n):
            if x == self.offsets[j]:
                return self._decide(j, None)
        return ("region", int(np.searchsorted(self.offsets, x, side="left")))

    def trace(self, x, t_end):
        """Position at ``t_end`` and the list of phases visited."""
        t = 0.0
        kind, idx = self._start(float(x))
        phases = [Phase(kind, idx, 0.0)]
        x = float(x)
        for _ in range(4 * self.n + 4):
            if kind == "slide":
                return self.xi(idx, t_end), phases
            v = self.speeds[idx]
            hits = []
            if idx < self.n:
                closing = v - self.rates[idx]
                if closing > 0:
                    hits.append(((self.xi(idx, t) - x) / closing, idx, "left"))
            if idx > 0:
                closing = self.rates[idx - 1] - v
                if closing > 0:
                    hits.append(((x - self.xi(idx - 1, t)) / closing, idx - 1, "right"))
            if not hits:
                return x + v * (t_end - t), phases
            tau, j, side = min(hits)
            tau = max(tau, 0.0)
            if t + tau >= t_end:
                return x + v * (t_end - t), phases
            t = t + tau
            x = self.xi(j, t)
            kind, idx = self._decide(j, side)
            phases.append(Phase(kind, idx, t))
        raise StepFailure("too many phase changes in exact tracking")

    def position(self, t, x):
        return self.trace(x, t)[0]

    def velocity(self, t, x):
        """``d/dt chi(t, x)`` (right derivative at phase switches)."""
        _, phases = self.trace(x, t)
        last = phases[-1]
        # a switch exactly at t belongs to the new phase
        if last.kind == "slide":
            return float(self.rates[last.index])
        return float(self.speeds[last.index])

    def signature(self, t, x):
        _, phases = self.trace(x, t)
        return tuple((p.kind, p.index) for p in phases)

    def cells(self, t):
        """Partition of the start line into intervals with affine ``chi(t, .)``.

        Returns a list of ``(lo, hi, slope, offset, velocity)``; ``slope == 0``
        marks an interval collapsed onto a single point.  Breaks are the curve
        starting points and the backward traces of both sides of each curve
        position at time ``t``.
        """
        if t == 0:
            return [(-math.inf, math.inf, 1.0, 0.0, None)]
        bounds = list(self.offsets)
        for j in range(self.n):
            for region in (j, j + 1):
                x0 = self._trace_back(j, region, self.xi(j, t), t)
                if x0 is not None:
                    bounds.append(x0)
        return self._cells_from(t, bounds)

    def _trace_back(self, j, region, y, t):
        """Start point whose trajectory reaches curve ``j`` at time ``t`` from ``region``."""
        # the ray must lie inside the region just before t
        rel = self.speeds[region] - self.rates[j]
        if rel == 0 or (j == region) != (rel > 0):
            return None
        for _ in range(2 * self.n + 2):
            v = self.speeds[region]
            best = None
            # backward: position y - v*(t - s); curve o + q*s
            for m, side in ((region - 1, "left"), (region, "right")):
                if m < 0 or m >= self.n:
                    continue
                closing = v - self.rates[m]
                if closing == 0:
                    continue
                s = t - (y - self.xi(m, t)) / closing
                if 0 < s < t and (best is None or s > best[0]):
                    best = (s, m, side)
            if best is None:
                return float(y - v * t)
            s, m, side = best
            y, t = self.xi(m, s), s
            region = m if side == "left" else m + 1
        raise StepFailure("too many crossings in backward tracing")

    def cells_by_sampling(self, t, samples=257):
        """Reference partition found by sampling signatures and bisecting."""
        if t == 0:
            return [(-math.inf, math.inf, 1.0, 0.0, None)]
        vmax = float(np.max(np.abs(self.speeds)) + (np.max(np.abs(self.rates)) if self.n else 0))
        centre = self.offsets if self.n else np.array([0.0])
        lo = float(np.min(centre)) - 2 * vmax * t - 1.0
        hi = float(np.max(centre)) + 2 * vmax * t + 1.0
        xs = np.unique(np.concatenate([np.linspace(lo, hi, samples), self.offsets]))
        sigs = [self.signature(t, x) for x in xs]
        bounds = []
        for i in range(len(xs) - 1):
            if sigs[i] != sigs[i + 1]:
                bounds.extend(self._boundaries(t, xs[i], sigs[i], xs[i + 1], sigs[i + 1], 0))
        return self._cells_from(t, bounds)

    def _cells_from(self, t, bounds):
        merged = []
        for b in sorted(set(float(b) for b in bounds)):
            # boundaries one ulp apart bracket a single start point (measure zero)
            if merged and b - merged[-1] <= 4 * np.finfo(float).eps * max(1.0, abs(b)):
                continue
            merged.append(b)
        edges = [-math.inf, *merged, math.inf]
        cells = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            p1, p2 = _interior_points(a, b)
            y1, y2 = self.position(t, p1), self.position(t, p2)
            slope = (y2 - y1) / (p2 - p1)
            if abs(slope) < 1e-12:
                slope = 0.0
            elif abs(slope - 1.0) < 1e-12:
                slope = 1.0
            offset = y1 - slope * p1
            vel = self.velocity(t, 0.5 * (p1 + p2))
            cells.append((a, b, slope, offset, vel))
        return cells

    def _boundaries(self, t, xa, sa, xb, sb, depth):
        while True:
            mid = 0.5 * (xa + xb)
            if mid <= xa or mid >= xb:
                return [xb]
            sm = self.signature(t, mid)
            if sm == sa:
                xa = mid
            elif sm == sb:
                xb = mid
            else:
                if depth > 8:
                    return [mid]
                return (self._boundaries(t, xa, sa, mid, sm, depth + 1)
                        + self._boundaries(t, mid, sm, xb, sb, depth + 1))


def _interior_points(a, b):
    if math.isinf(a) and math.isinf(b):
        return -1.0, 1.0
    if math.isinf(a):
        return b - 2.0, b - 1.0
    if math.isinf(b):
        return a + 1.0, a + 2.0
    return a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0

# }}}


# {{{ numeric integration

def solve_vector(rhs, x0, times, rtol=RTOL, atol=ATOL, dense=False):
    """Integrate ``x' = rhs(t, x)`` for a vector of start points.

    :returns: array of shape ``(len(times), len(x0))`` (or the solver result when ``dense``).
    """
    x0 = np.asarray(x0, dtype=float)
    times = np.asarray(times, dtype=float)
    t_end = float(np.max(times)) if times.size else 0.0
    if t_end == 0.0 and not dense:
        return np.repeat(x0[None, :], len(times), axis=0)
    sol = solve_ivp(rhs, (0.0, t_end), x0, method="DOP853", t_eval=None if dense else times,
                    rtol=rtol, atol=atol, dense_output=dense)
    if not sol.success:
        raise StepFailure(sol.message)
    if dense:
        return sol
    return sol.y.T


class SeparableFlow:
    """Flow of ``x' = g(x - c t)`` by time of flight in the frame ``y = x - c t``.

    With ``v(y) = g(y) - c`` every trajectory obeys ``Phi(y(t)) = Phi(y0) + t``
    where ``Phi' = 1/v`` between consecutive zeros of ``v``.  ``Phi`` is
    tabulated on Gauss-Kronrod panels; zeros of ``v`` are barriers that are
    approached but never crossed.  ``focus`` lists ``(centre, width)`` pairs
    where ``g`` varies quickly and knots are packed.
    """

    def __init__(self, g, speed, lo, hi, focus=(), panels=2048, zero_levels=48):
        self.g = g
        self.c = float(speed)
        self.lo, self.hi = float(lo), float(hi)
        parts = [np.linspace(lo, hi, panels + 1)]
        for centre, width in focus:
            parts.append(centre + width * np.linspace(-1.5, 1.5, 385))
        knots = np.unique(np.concatenate(parts))
        knots = knots[(knots >= lo) & (knots <= hi)]
        # pack knots geometrically around every sign change of v (zeros included)
        sv = np.sign(self.v(knots))
        idx = np.nonzero(sv[:-1] != sv[1:])[0]
        extra = []
        for i in idx:
            z = self._locate(knots[i], knots[i + 1], sv[i])
            h = knots[i + 1] - knots[i]
            geo = h * 2.0 ** -np.arange(zero_levels)
            extra.extend([z - geo, z + geo, [z]])
        if extra:
            knots = np.unique(np.concatenate([knots, *extra]))
            knots = knots[(knots >= lo) & (knots <= hi)]
        self.knots = knots
        vk = self.v(knots)
        nodes = panel_nodes(knots[:-1], knots[1:])
        vn = self.v(nodes)
        same = (np.all(vn > 0, axis=1) | np.all(vn < 0, axis=1))
        same &= (vk[:-1] != 0) & (np.sign(vk[:-1]) == np.sign(vk[1:]))
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            integ = (1.0 / vn) @ KRONROD_WEIGHTS * 0.5 * np.diff(knots)
        self.finite = same & np.isfinite(integ)
        # Phi at knots, restarted at zero on each run of finite panels
        phi = np.zeros(len(knots))
        run_of = np.full(len(knots) - 1, -1)
        runs = []
        k = 0
        while k < len(knots) - 1:
            if not self.finite[k]:
                k += 1
                continue
            start = k
            while k < len(knots) - 1 and self.finite[k] and np.sign(vk[k]) == np.sign(vk[start]):
                phi[k + 1] = phi[k] + integ[k]
                run_of[k] = len(runs)
                k += 1
            runs.append((start, k, float(np.sign(vk[start]))))
        self.phi = phi
        self.run_of = run_of
        self.runs = runs

    def v(self, y):
        return np.asarray(self.g(y), dtype=float) - self.c

    def _locate(self, a, b, sa):
        for _ in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            if np.sign(self.v(m)) == sa:
                a = m
            else:
                b = m
        return b if sa != 0 else a

    def _local(self, a, y):
        """``int_a^y dz / v(z)`` for arrays ``a <= y`` inside one finite panel."""
        half = 0.5 * (y - a)
        z = (0.5 * (a + y))[:, None] + half[:, None] * NODES[None, :]
        return (1.0 / self.v(z)) @ KRONROD_WEIGHTS * half

    def positions(self, x0, times):
        """``chi(t, x0)`` with shape ``(len(times), len(x0))``."""
        y0 = np.asarray(x0, dtype=float)
        times = np.asarray(times, dtype=float)
        if np.any(y0 < self.lo) or np.any(y0 > self.hi):
            raise OutsideDomain("start point outside the tabulated window")
        out = np.repeat(y0[None, :], len(times), axis=0)
        p = np.clip(np.searchsorted(self.knots, y0, side="right") - 1, 0, len(self.knots) - 2)
        moving = self.finite[p] & (self.v(y0) != 0)
        last = len(self.knots) - 1
        for r, (k0, k1, sgn) in enumerate(self.runs):
            sel = np.nonzero(moving & (self.run_of[p] == r))[0]
            if not len(sel):
                continue
            phi0 = self.phi[p[sel]] + self._local(self.knots[p[sel]], y0[sel])
            G = sgn * self.phi[k0:k1 + 1]
            for i, t in enumerate(times):
                if t == 0:
                    continue
                target = phi0 + t
                q = np.searchsorted(G, sgn * target, side="right") - 1 + k0
                y = np.empty(len(sel))
                low, high = q < k0, q >= k1
                if np.any(low & (k0 == 0)) or np.any(high & (k1 == last)):
                    raise OutsideDomain("trajectory leaves the tabulated window")
                y[low] = self.knots[k0]
                y[high] = self.knots[k1]
                mid = ~(low | high)
                if np.any(mid):
                    y[mid] = self._invert(q[mid], target[mid], sgn)
                out[i, sel] = y
        return out + self.c * times[:, None]

    def _invert(self, q, target, sgn):
        a = self.knots[q].copy()
        b = self.knots[q + 1].copy()
        base = self.phi[q]
        left = self.knots[q]
        y = 0.5 * (a + b)
        for _ in range(60):
            res = sgn * (base + self._local(left, y) - target)
            a = np.where(res <= 0, y, a)
            b = np.where(res > 0, y, b)
            with np.errstate(invalid="ignore", divide="ignore"):
                step = y - sgn * res * self.v(y)
            y_new = np.where((step > a) & (step < b), step, 0.5 * (a + b))
            if np.all(np.abs(y_new - y) <= 2e-16 * (1.0 + np.abs(y))):
                return y_new
            y = y_new
        return y


def _filippov_numeric(coeff, x0, t_end, rtol=RTOL, atol=ATOL):
    """Single Filippov trajectory for general piecewise-smooth coefficients."""
    t, x = 0.0, float(x0)
    n = len(coeff.curves)
    phase = _numeric_start(coeff, x)
    for _ in range(64):
        if t >= t_end:
            return x
        kind, idx = phase
        if kind == "slide":
            curve = coeff.curves[idx]
            t_exit, side = _slide_exit(coeff, idx, t, t_end)
            if t_exit is None:
                return curve(t_end)
            t, x = t_exit, curve(t_exit)
            phase = ("region", idx + 1 if side == "right" else idx)
            continue
        piece = coeff.pieces[idx]
        events = []
        if idx < n:
            c = coeff.curves[idx]
            ev = lambda s, y, c=c: y[0] - c(s)
            ev.terminal, ev.direction = True, 1.0
            events.append((ev, idx, "left"))
        if idx > 0:
            c = coeff.curves[idx - 1]
            ev = lambda s, y, c=c: y[0] - c(s)
            ev.terminal, ev.direction = True, -1.0
            events.append((ev, idx - 1, "right"))
        sol = solve_ivp(lambda s, y: [piece(s, y[0])], (t, t_end), [x], method="DOP853",
                        rtol=rtol, atol=atol, events=[e for e, _, _ in events] or None)
        if not sol.success:
            raise StepFailure(sol.message)
        if sol.status == 1:
            k = next(i for i, te in enumerate(sol.t_events) if len(te))
            _, j, side = events[k]
            t = float(sol.t_events[k][0])
            x = coeff.curves[j](t)
            phase = _numeric_decide(coeff, j, t, side)
        else:
            return float(sol.y[0, -1])
    raise StepFailure("too many phase changes")


def _relative(coeff, j, t):
    a, b = coeff.limits(j, t)
    s = coeff.curves[j].slope(t)
    return a - s, b - s


def _numeric_decide(coeff, j, t, came_from):
    rl, rr = _relative(coeff, j, t)
    if came_from == "left":
        return ("region", j + 1) if rr > 0 else ("slide", j)
    if came_from == "right":
        return ("region", j) if rl < 0 else ("slide", j)
    if rl < 0 < rr:
        raise ForwardUniquenessViolated(f"repelling jump on curve {j} at t={t:g}")
    if rl > 0 and rr > 0:
        return ("region", j + 1)
    if rl < 0 and rr < 0:
        return ("region", j)
    return ("slide", j)


def _numeric_start(coeff, x):
    for j, xi in enumerate(coeff.curve_positions(0.0)):
        if x == xi:
            return _numeric_decide(coeff, j, 0.0, None)
    return ("region", int(coeff.region(0.0, x)))


def _slide_exit(coeff, j, t0, t1, samples=256):
    """First time the sliding condition ``rl >= 0 >= rr`` fails, located by root finding."""
    ts = np.linspace(t0, t1, samples + 1)
    prev = t0
    for s in ts[1:]:
        rl, rr = _relative(coeff, j, s)
        if rl < 0:
            root = brentq(lambda u: _relative(coeff, j, u)[0], prev, s, xtol=EVENT_TOL)
            return root, "left"
        if rr > 0:
            root = brentq(lambda u: _relative(coeff, j, u)[1], prev, s, xtol=EVENT_TOL)
            return root, "right"
        prev = s
    return None, None

# }}}


# {{{ flow maps

class FlowMap:
    """Evaluable flow ``chi(t, x)`` on ``[0, T]``."""

    kind = "numeric"

    def __init__(self, coeff, T, x_grid, method):
        self.coefficient = coeff
        self.T = float(T)
        self.x_grid = np.asarray(x_grid, dtype=float)
        self.method = method

    def _check_time(self, t):
        if t < 0 or t > self.T + 1e-12:
            raise OutsideDomain(f"t={t} outside [0, {self.T}]")

    def samples(self, times):
        rows = []
        for t in times:
            chi = self(float(t), self.x_grid)
            rows.extend((float(t), float(x), float(c)) for x, c in zip(self.x_grid, chi))
        return rows

    def to_csv(self, path, times):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "x0", "chi"))
            for row in self.samples(times):
                w.writerow([repr(v) for v in row])


class ExactFlowMap(FlowMap):
    kind = "exact-piecewise"

    def __init__(self, coeff, T, x_grid):
        super().__init__(coeff, T, x_grid, "filippov")
        self.tracker = ExactTracker(coeff)

    def __call__(self, t, x):
        self._check_time(t)
        if t == 0:
            return np.array(x, dtype=float, copy=True) if np.ndim(x) else float(x)
        if np.ndim(x) == 0:
            return float(self.tracker.position(t, float(x)))
        return np.array([self.tracker.position(t, float(v)) for v in np.ravel(x)]).reshape(np.shape(x))

    def velocity(self, t, x):
        if np.ndim(x) == 0:
            return self.tracker.velocity(t, float(x))
        return np.array([self.tracker.velocity(t, float(v)) for v in np.ravel(x)]).reshape(np.shape(x))

    def cells(self, t):
        return self.tracker.cells(t)


class NumericFlowMap(FlowMap):
    """Flow from numeric integration; grid trajectories carry dense output."""

    def __init__(self, coeff, T, x_grid, method, rtol=RTOL, atol=ATOL):
        super().__init__(coeff, T, x_grid, method)
        self.rtol, self.atol = rtol, atol
        self._dense = None

    def _trajectories(self, x, t):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.method == "caratheodory":
            coeff = self.coefficient
            return solve_vector(lambda s, y: coeff(s, y), x, [t], self.rtol, self.atol)[0]
        return np.array([_filippov_numeric(self.coefficient, v, t, self.rtol, self.atol) for v in x])

    def __call__(self, t, x):
        self._check_time(t)
        if t == 0:
            return np.array(x, dtype=float, copy=True) if np.ndim(x) else float(x)
        out = self._trajectories(x, float(t))
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))

    def grid_values(self, t):
        """Trajectories of the start grid at time ``t`` (dense output, Caratheodory only)."""
        if self.method != "caratheodory":
            return self(t, self.x_grid)
        if self._dense is None:
            coeff = self.coefficient
            self._dense = solve_vector(lambda s, y: coeff(s, y), self.x_grid, [self.T],
                                       self.rtol, self.atol, dense=True)
        return self._dense.sol(t) if t > 0 else self.x_grid.copy()

    def interpolate(self, t, x):
        """Monotone (PCHIP) interpolation of the grid trajectories."""
        vals = np.maximum.accumulate(self.grid_values(t))
        return PchipInterpolator(self.x_grid, vals, extrapolate=True)(x)

    def velocity(self, t, x):
        y = self(t, x)
        return self.coefficient(t, y)


def _osl_window(coeff, T, xs):
    beta = coeff.envelope(0.0, T if math.isfinite(T) else 1.0)
    pos = list(coeff.curve_positions(0.0)) + list(np.ravel(xs))
    span = beta * T + 1.0
    return ((0.0, T), (min(pos) - span, max(pos) + span))


def _forward_unique(coeff, T, xs):
    cache = coeff.__dict__.setdefault("_osl_cache", {})
    window = _osl_window(coeff, T, xs)
    key = (round(window[0][1], 9), round(window[1][0], 6), round(window[1][1], 6))
    if key not in cache:
        cache[key] = one_sided_lipschitz_estimate(coeff, window, 65)
    return cache[key]


def _default_grid(coeff, T):
    beta = coeff.envelope(0.0, T)
    r = 3.0 + beta * T
    return np.linspace(-r, r, 241)


def caratheodory_flow(coeff, T, x_grid=None, rtol=RTOL, atol=ATOL, check=True):
    """Numeric flow of ``x' = a(t, x)`` for coefficients continuous in ``x``."""
    x_grid = _default_grid(coeff, T) if x_grid is None else np.asarray(x_grid, dtype=float)
    if check:
        if not coeff.is_continuous():
            raise NotApplicable("coefficient is discontinuous in x across a jump curve")
        if not math.isfinite(_forward_unique(coeff, T, x_grid)):
            raise NotApplicable("one-sided Lipschitz estimate diverges (no forward uniqueness)")
    return NumericFlowMap(coeff, T, x_grid, "caratheodory", rtol, atol)


def filippov_flow_map(coeff, T, x_grid=None):
    """Filippov flow map; exact for constant pieces with affine curves."""
    x_grid = _default_grid(coeff, T) if x_grid is None else np.asarray(x_grid, dtype=float)
    if coeff.is_piecewise_constant and coeff.has_affine_curves:
        return ExactFlowMap(coeff, T, x_grid)
    if not math.isfinite(_forward_unique(coeff, T, x_grid)):
        raise ForwardUniquenessViolated("one-sided Lipschitz estimate is +inf on the window")
    return NumericFlowMap(coeff, T, x_grid, "filippov")


def filippov_flow(coeff, t, x):
    """``chi_F(t, x)`` for one point."""
    t, x = float(t), float(x)
    if t < 0 or not math.isfinite(x) or t > coeff.T:
        raise OutsideDomain(f"(t, x) = ({t}, {x}) outside the domain")
    if coeff.is_piecewise_constant and coeff.has_affine_curves:
        return ExactTracker(coeff).position(t, x)
    if not math.isfinite(_forward_unique(coeff, max(t, 1e-9), [x])):
        raise ForwardUniquenessViolated("one-sided Lipschitz estimate is +inf on the window")
    return _filippov_numeric(coeff, x, t)


def flow_semigroup_check(flow, r, s, x_grid):
    """``max |chi(s, chi(r, x)) - chi(s + r, x)|`` over the grid."""
    if not flow.coefficient.is_autonomous:
        raise NotAutonomous("semigroup property needs a time-independent coefficient")
    if r + s > flow.T + 1e-12:
        raise OutsideDomain("r + s exceeds the flow horizon")
    x_grid = np.asarray(x_grid, dtype=float)
    inner = flow(r, x_grid)
    return float(np.max(np.abs(flow(s, inner) - flow(r + s, x_grid))))

# }}}
