"""Piecewise-smooth coefficients separated by jump curves ``x = xi(t)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import OutsideDomain, ParseError, PrescribedMissing
from .expr import Expr, as_expr

LEFT, RIGHT, PRESCRIBED = "left", "right", "prescribed"
_SIDES = (LEFT, RIGHT, PRESCRIBED)


@dataclass(frozen=True)
class JumpCurve:
    """A curve ``x = xi(t)`` valid for ``t_start <= t <= t_end``."""

    position: Expr
    t_start: float = 0.0
    t_end: float = math.inf

    def __post_init__(self):
        pos = as_expr(self.position)
        if pos.depends_on_x:
            raise ParseError(f"jump curve {pos.text!r} must depend on t only")
        object.__setattr__(self, "position", pos)

    def __call__(self, t):
        return self.position(t, 0.0)

    @cached_property
    def affine(self):
        """``(offset, rate)`` when ``xi(t) = offset + rate*t``, else ``None``."""
        if not self.position.depends_on_t:
            return (self.position(0.0), 0.0)
        ts = np.array([0.0, 1.0, 2.0, 3.7, 11.3])
        xs = self.position(ts, 0.0)
        rate = xs[1] - xs[0]
        pred = xs[0] + rate * ts
        if np.all(np.abs(pred - xs) <= 1e-12 * (1.0 + np.abs(xs))):
            return (float(xs[0]), float(rate))
        return None

    def slope(self, t):
        if self.affine is not None:
            return self.affine[1]
        h = 1e-4 * (1.0 + abs(t))
        f = self.position
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)


def _curve(value):
    if isinstance(value, JumpCurve):
        return value
    if isinstance(value, dict):
        return JumpCurve(as_expr(value["xi"]), float(value.get("t0", 0.0)),
                         float(value.get("t1", math.inf)))
    return JumpCurve(as_expr(value))


class PiecewiseCoefficient:
    """Coefficient ``a(t, x)`` given by smooth pieces between ordered jump curves.

    Piece ``i`` lives between curve ``i - 1`` and curve ``i``.  Optional
    ``prescribed`` maps a curve index to the on-curve value ``lambda(t)``.
    """

    def __init__(self, pieces, curves=(), prescribed=None, regularity=None, bounds=None,
                 T=math.inf, name="", params=None, derivatives=None):
        params = dict(params or {})
        self.params = params
        self.pieces = tuple(as_expr(p, params) for p in pieces)
        self.curves = tuple(_curve(c if not isinstance(c, str) else as_expr(c, params))
                            for c in curves)
        if len(self.pieces) != len(self.curves) + 1:
            raise ParseError("need exactly one more piece than jump curves")
        self.prescribed = {int(k): as_expr(v, params) for k, v in (prescribed or {}).items()}
        for k in self.prescribed:
            if not 0 <= k < len(self.curves):
                raise ParseError(f"prescribed value for unknown curve {k}")
        self.derivatives = (tuple(as_expr(d, params) for d in derivatives)
                            if derivatives else None)
        self.regularity = dict(regularity or {})
        self.bounds = None if bounds is None else (float(bounds[0]), float(bounds[1]))
        self.T = float(T)
        self.name = name
        self._check_order()

    # -- construction helpers ----------------------------------------------
    @classmethod
    def constant(cls, value, **kw):
        return cls([repr(float(value))], **kw)

    @classmethod
    def smooth(cls, expr, **kw):
        return cls([expr], **kw)

    @classmethod
    def step(cls, left, right, at="0", **kw):
        return cls([left, right], [at], **kw)

    @classmethod
    def moving_jump(cls, c1, c2, alpha, prescribed=None, **kw):
        """``c1`` left of ``x = alpha*t``, ``c2`` right of it."""
        pres = None if prescribed is None else {0: prescribed}
        return cls([repr(float(c1)), repr(float(c2))], [f"{float(alpha)!r} * t"],
                   prescribed=pres, **kw)

    def _check_order(self):
        if len(self.curves) < 2:
            return
        hi = self.T if math.isfinite(self.T) else 10.0
        for t in np.linspace(0.0, hi, 33):
            pos = [c(t) for c in self.curves]
            if any(b <= a for a, b in zip(pos[:-1], pos[1:])):
                raise ParseError(f"jump curves intersect or are unordered at t={t:g}")

    # -- structure ----------------------------------------------------------
    @property
    def is_piecewise_constant(self):
        return all(p.is_constant for p in self.pieces)

    @property
    def has_affine_curves(self):
        return all(c.affine is not None for c in self.curves)

    @property
    def is_autonomous(self):
        return (not any(p.depends_on_t for p in self.pieces)
                and not any(c.position.depends_on_t for c in self.curves))

    def curve_positions(self, t):
        return np.array([c(t) for c in self.curves], dtype=float)

    def limits(self, j, t):
        """One-sided limits ``(a_minus, a_plus)`` across curve ``j``."""
        xi = self.curves[j](t)
        return self.pieces[j](t, xi), self.pieces[j + 1](t, xi)

    def jumps(self, t):
        return [b - a for a, b in (self.limits(j, t) for j in range(len(self.curves)))]

    def is_continuous(self, times=None, tol=1e-12):
        if not self.curves:
            return True
        times = self._sample_times() if times is None else times
        return all(abs(J) <= tol for t in times for J in self.jumps(t))

    def _sample_times(self, n=17):
        hi = self.T if math.isfinite(self.T) else 1.0
        return np.linspace(0.0, hi, n)

    def region(self, t, x):
        """Index of the piece containing ``x`` (points on curve ``j`` get ``j``)."""
        return np.searchsorted(self.curve_positions(t), x, side="left")

    # -- evaluation ---------------------------------------------------------
    def __call__(self, t, x):
        """Vectorized value; on a curve the prescribed value, else the mean of the limits."""
        if np.ndim(t):
            tt, xx = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
            out = np.empty(tt.shape)
            for tv in np.unique(tt):
                m = tt == tv
                out[m] = self(float(tv), xx[m])
            return out
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        pos = self.curve_positions(t)
        idx = np.searchsorted(pos, x, side="left")
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if np.any(m):
                out[m] = piece(t, x[m])
        for j, xi in enumerate(pos):
            m = x == xi
            if np.any(m):
                out[m] = self.on_curve_value(j, t)
        return float(out[0]) if scalar else out

    def on_curve_value(self, j, t):
        if j in self.prescribed:
            return self.prescribed[j](t, 0.0)
        a, b = self.limits(j, t)
        return 0.5 * (a + b)

    def dx(self, t, x):
        """Spatial derivative of the pieces (declared or 4th-order differences)."""
        x = np.asarray(x, dtype=float)
        idx = self.region(t, x)
        out = np.empty_like(x, dtype=float)
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if not np.any(m):
                continue
            if self.derivatives is not None:
                out[m] = self.derivatives[i](t, x[m])
            else:
                xm = x[m]
                h = 1e-3 * (1.0 + np.abs(xm))
                f = lambda y: piece(t, y)
                out[m] = (-f(xm + 2 * h) + 8 * f(xm + h) - 8 * f(xm - h) + f(xm - 2 * h)) / (12 * h)
        return float(out) if out.ndim == 0 else out

    def envelope(self, t0=0.0, t1=None):
        """An upper bound ``beta`` for ``|a|`` on the time window (sampled for smooth pieces)."""
        if self.bounds is not None:
            return max(abs(self.bounds[0]), abs(self.bounds[1]))
        if self.is_piecewise_constant:
            return max(abs(p.constant_value()) for p in self.pieces)
        t1 = (self.T if math.isfinite(self.T) else 1.0) if t1 is None else t1
        xs = np.linspace(-20.0, 20.0, 4001)
        return float(max(np.max(np.abs(self(t, xs))) for t in np.linspace(t0, t1, 9)))

    def slice_measure(self, t):
        """The time slice as a density-only measure state."""
        from .measures import DensityPanel, MeasureState

        edges = [-math.inf, *self.curve_positions(t), math.inf]
        panels = tuple(DensityPanel(lo, hi, p.at_time(t))
                       for lo, hi, p in zip(edges[:-1], edges[1:], self.pieces))
        return MeasureState(t, (), panels)

    def describe(self):
        return {
            "name": self.name,
            "pieces": [p.text for p in self.pieces],
            "curves": [c.position.text for c in self.curves],
            "prescribed": {str(k): v.text for k, v in self.prescribed.items()},
            "regularity": self.regularity,
            "bounds": self.bounds,
        }

    def __repr__(self):
        return f"PiecewiseCoefficient({self.describe()})"


class SmoothCoefficient:
    """A coefficient given by a vectorized callable with an optional derivative."""

    curves = ()
    prescribed = {}
    is_piecewise_constant = False
    has_affine_curves = True

    def __init__(self, fn, dfn=None, autonomous=True, bound=None, name="", regularity=None):
        self.fn = fn
        self.dfn = dfn
        self._autonomous = autonomous
        self.bound = bound
        self.name = name
        self.regularity = dict(regularity or {"global": "smooth"})
        self.T = math.inf
        self.bounds = None

    @property
    def is_autonomous(self):
        return self._autonomous

    def __call__(self, t, x):
        return self.fn(t, x)

    def dx(self, t, x):
        if self.dfn is not None:
            return self.dfn(t, x)
        x = np.asarray(x, dtype=float)
        h = 1e-3 * (1.0 + np.abs(x))
        f = lambda y: self.fn(t, y)
        return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)

    def is_continuous(self, times=None, tol=0.0):
        return True

    def curve_positions(self, t):
        return np.array([])

    def envelope(self, t0=0.0, t1=1.0):
        if self.bound is not None:
            return float(self.bound)
        xs = np.linspace(-20.0, 20.0, 4001)
        return float(max(np.max(np.abs(self.fn(t, xs))) for t in np.linspace(t0, t1, 5)))

    def describe(self):
        return {"name": self.name, "kind": "smooth-callable"}


# -- operations ---------------------------------------------------------------

def _on_curve(coeff, t, x):
    for j, xi in enumerate(coeff.curve_positions(t)):
        if abs(x - xi) <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return j
    return None


def _check_domain(coeff, t, x):
    if not (math.isfinite(t) and math.isfinite(x)) or t < 0 or t > coeff.T:
        raise OutsideDomain(f"(t, x) = ({t}, {x}) outside the closed domain")


def eval_coeff(coeff, t, x, side=LEFT):
    """Value of ``a(t, x)``; on a jump curve the left/right limit or the prescribed value."""
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}")
    t, x = float(t), float(x)
    _check_domain(coeff, t, x)
    j = _on_curve(coeff, t, x)
    if j is None:
        return float(coeff(t, x))
    if side == PRESCRIBED:
        if j not in coeff.prescribed:
            raise PrescribedMissing(f"no prescribed value on curve {j}")
        return float(coeff.prescribed[j](t, 0.0))
    a, b = coeff.limits(j, t)
    return float(a if side == LEFT else b)


def essential_convex_hull(coeff, t, x):
    """Closed interval ``(lo, hi)`` spanned by the essential limits at ``x``."""
    t, x = float(t), float(x)
    _check_domain(coeff, t, x)
    j = _on_curve(coeff, t, x)
    if j is None:
        v = float(coeff(t, x))
        return (v, v)
    a, b = coeff.limits(j, t)
    return (float(min(a, b)), float(max(a, b)))


def _pair_sup(x, y):
    dx = x[None, :] - x[:, None]
    dy = y[None, :] - y[:, None]
    iu = np.triu_indices(len(x), k=1)
    q = dy[iu] / dx[iu]
    k = int(np.argmax(q))
    return float(q[k]), (float(x[iu[0][k]]), float(x[iu[1][k]]))


@dataclass(frozen=True)
class QuotientEstimate:
    """Sup of difference quotients with the refinement history."""

    value: float
    history: tuple
    location: tuple
    diverged: bool


def quotient_sup(f, lo, hi, n=65, cap=1e6, max_levels=160):
    """Sup of ``(f(x) - f(y))/(x - y)`` over sampled pairs, refined around the maximizer.

    Each refinement level keeps ``n`` points on a window half as wide as
    the previous argmax pair separation.  The result is ``+inf`` when the
    quotient exceeds ``cap`` and then grows at each of two further levels.
    """
    n = max(int(n), 2)
    x = np.linspace(lo, hi, n)
    best, (xa, xb) = _pair_sup(x, np.asarray(f(x), dtype=float))
    history = [best]
    location = (xa, xb)
    above = 0
    for _ in range(max_levels):
        centre, half = 0.5 * (xa + xb), 0.5 * abs(xb - xa)
        xs = np.linspace(centre - half, centre + half, n)
        if np.unique(xs).size < n:
            break
        ys = np.asarray(f(xs), dtype=float)
        noise = 8 * np.finfo(float).eps * np.max(np.abs(ys)) / (xs[1] - xs[0])
        q, (xa_new, xb_new) = _pair_sup(xs, ys)
        if noise > 1e-6 * max(1.0, abs(q)):
            break  # quotients no longer resolved in floating point
        xa, xb = xa_new, xb_new
        prev = history[-1]
        history.append(q)
        if q > best:
            best, location = q, (xa, xb)
        if q > cap:
            above = above + 1 if (above == 0 or q > prev) else 0
            if above >= 3:
                return QuotientEstimate(math.inf, tuple(history), location, True)
        else:
            above = 0
        if len(history) > 3 and max(abs(q - prev), abs(prev - history[-3])) <= 1e-10 * max(1.0, abs(q)):
            break
    return QuotientEstimate(best, tuple(history), location, False)


def one_sided_lipschitz_estimate(coeff, window=((0.0, 1.0), (-3.0, 3.0)), sample_count=65,
                                 cap=1e6):
    """Sup over the window of ``(a(t,x) - a(t,y))(x - y)/|x - y|^2`` (``+inf`` on divergence)."""
    return one_sided_lipschitz_details(coeff, window, sample_count, cap).value


def one_sided_lipschitz_details(coeff, window=((0.0, 1.0), (-3.0, 3.0)), sample_count=65,
                                cap=1e6):
    (t0, t1), (x0, x1) = window
    n = max(int(sample_count), 2)
    times = [t0] if coeff.is_autonomous else np.linspace(t0, t1, n)
    xs = np.linspace(x0, x1, n)
    best_t, best_q = times[0], -math.inf
    for t in times:
        q, _ = _pair_sup(xs, np.asarray(coeff(float(t), xs), dtype=float))
        if q > best_q:
            best_t, best_q = float(t), q
    est = quotient_sup(lambda y: coeff(best_t, y), x0, x1, n, cap)
    return QuotientEstimate(max(est.value, best_q), est.history, (best_t, *est.location),
                            est.diverged)


def lower_quotient_details(coeff, window=((0.0, 1.0), (-3.0, 3.0)), sample_count=65, cap=1e6):
    """Inf of difference quotients (``-inf`` on confirmed divergence)."""
    (t0, t1), (x0, x1) = window
    n = max(int(sample_count), 2)
    times = [t0] if coeff.is_autonomous else np.linspace(t0, t1, n)
    xs = np.linspace(x0, x1, n)
    best_t, best_q = times[0], -math.inf
    for t in times:
        q, _ = _pair_sup(xs, -np.asarray(coeff(float(t), xs), dtype=float))
        if q > best_q:
            best_t, best_q = float(t), q
    est = quotient_sup(lambda y: -np.asarray(coeff(best_t, y)), x0, x1, n, cap)
    value = -max(est.value, best_q)
    return QuotientEstimate(value, tuple(-h for h in est.history), (best_t, *est.location),
                            est.diverged)
