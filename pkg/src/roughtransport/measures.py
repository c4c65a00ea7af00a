"""Signed measures on the line: finitely many atoms plus density panels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .expr import Expr, as_expr
from .quadrature import integrate


def _num(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def _from_num(v):
    if isinstance(v, str):
        return float(v)
    return float(v)


@dataclass(frozen=True)
class DensityPanel:
    """A density on ``[lo, hi]`` given by an expression in ``x`` or a callable."""

    lo: float
    hi: float
    density: object
    breaks: tuple = ()

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty panel [{self.lo}, {self.hi}]")
        if isinstance(self.density, (str, int, float)):
            object.__setattr__(self, "density", as_expr(self.density))

    def __call__(self, x):
        if isinstance(self.density, Expr):
            return self.density(0.0, x)
        return np.asarray(self.density(x), dtype=float)

    @property
    def is_expr(self):
        return isinstance(self.density, Expr)

    @property
    def is_constant(self):
        return self.is_expr and self.density.is_constant

    @property
    def text(self):
        return self.density.text if self.is_expr else "<callable>"

    def pushed_affine(self, slope, offset, weight=1.0, image=None):
        """Image of this panel under ``x -> slope*x + offset`` (``slope > 0``).

        ``image`` optionally overrides the image interval (used to keep the
        images of adjacent panels exactly contiguous).
        """
        lo, hi = image if image is not None else (slope * self.lo + offset,
                                                  slope * self.hi + offset)
        breaks = tuple(slope * b + offset for b in self.breaks)
        if self.is_expr:
            dens = self.density.affine_pullback(slope, offset)
            if weight != 1.0:
                dens = dens.scaled(weight)
            # collapse constant densities back to a plain number
            if dens.is_constant:
                dens = Expr(repr(dens.constant_value()))
        else:
            f = self.density
            dens = lambda y, f=f: weight * np.asarray(f((y - offset) / slope)) / slope
        return DensityPanel(lo, hi, dens, breaks)

    def to_json(self):
        return {"lo": _num(self.lo), "hi": _num(self.hi), "density": self.text}


@dataclass(frozen=True)
class MeasureState:
    """``u(t) = sum_k w_k delta(x - x_k) + sum_j d_j(x) 1_[lo_j, hi_j]``."""

    t: float = 0.0
    atoms: tuple = ()
    panels: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        for x, w in atoms:
            if not (math.isfinite(x) and math.isfinite(w)):
                raise ValueError("atom locations and weights must be finite")
        panels = tuple(sorted(self.panels, key=lambda p: p.lo))
        for a, b in zip(panels[:-1], panels[1:]):
            if b.lo < a.hi:
                raise ValueError(f"overlapping density panels [{a.lo},{a.hi}] and [{b.lo},{b.hi}]")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "panels", panels)

    # -- constructors -------------------------------------------------------
    @classmethod
    def dirac(cls, x=0.0, weight=1.0, t=0.0):
        return cls(t, ((x, weight),))

    @classmethod
    def density(cls, expr, lo=-math.inf, hi=math.inf, t=0.0, params=None):
        return cls(t, (), (DensityPanel(lo, hi, as_expr(expr, params)),))

    @classmethod
    def lebesgue(cls, value=1.0, t=0.0):
        return cls.density(repr(float(value)), t=t)

    # -- algebra ------------------------------------------------------------
    def at(self, t):
        return replace(self, t=float(t))

    def scaled(self, c):
        c = float(c)
        atoms = tuple((x, c * w) for x, w in self.atoms)
        panels = []
        for p in self.panels:
            if p.is_expr:
                d = p.density.scaled(c)
            else:
                d = lambda y, f=p.density: c * np.asarray(f(y))
            panels.append(DensityPanel(p.lo, p.hi, d, p.breaks))
        return MeasureState(self.t, atoms, tuple(panels))

    def __add__(self, other):
        """Sum; overlapping panels are merged on the common refinement."""
        atoms = merge_atoms(self.atoms + other.atoms)
        panels = _merge_panels(list(self.panels) + list(other.panels))
        return MeasureState(self.t, atoms, tuple(panels))

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def split_panel(self, index, point):
        """Split panel ``index`` at an interior point (pairings are unchanged)."""
        p = self.panels[index]
        if not p.lo < point < p.hi:
            raise ValueError("split point must be interior")
        left = DensityPanel(p.lo, point, p.density, tuple(b for b in p.breaks if b < point))
        right = DensityPanel(point, p.hi, p.density, tuple(b for b in p.breaks if b > point))
        panels = self.panels[:index] + (left, right) + self.panels[index + 1:]
        return MeasureState(self.t, self.atoms, panels)

    # -- evaluation ---------------------------------------------------------
    def density_at(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.panels:
            m = (x >= p.lo) & (x < p.hi)
            if np.any(m):
                out[m] = p(x[m])
        return out

    def breakpoints(self):
        pts = {x for x, _ in self.atoms}
        for p in self.panels:
            pts.update(v for v in (p.lo, p.hi, *p.breaks) if math.isfinite(v))
        return sorted(pts)

    def pair(self, g, tol=1e-10):
        """``<u, g>`` for a callable ``g`` exposing ``support = (lo, hi)``.

        Atoms are evaluated exactly.  Constant panels against bump tests use
        the profile antiderivative; other densities are integrated adaptively
        over each panel intersected with the support of ``g``.
        """
        s0, s1 = g.support
        value = 0.0
        err = 0.0
        for x, w in self.atoms:
            if s0 <= x <= s1:
                value += w * float(g(x))
        active = [p for p in self.panels if p.hi > s0 and p.lo < s1]
        share = tol / max(1, len(active))
        exact = _antiderivative(g)
        for p in active:
            lo, hi = max(p.lo, s0), min(p.hi, s1)
            if hi <= lo:
                continue
            if exact is not None and p.is_constant:
                value += p.density.constant_value() * (exact(hi) - exact(lo))
                continue
            cuts = [b for b in p.breaks if lo < b < hi] + [x for x, _ in self.atoms if lo < x < hi]
            val, e = integrate(lambda y, p=p: p(y) * g(y), lo, hi, tol=share, breakpoints=cuts)
            value += val
            err += e
        return float(value), float(err)

    def pair_family(self, tests, tol=1e-10):
        """Pair against many tests at once; returns ``(values, errors)`` arrays.

        Bump tests sharing a profile and derivative order are evaluated as one
        array operation on atoms and constant panels.
        """
        values = np.zeros(len(tests))
        errors = np.zeros(len(tests))
        groups = {}
        for i, g in enumerate(tests):
            if _antiderivative(g) is None:
                values[i], errors[i] = self.pair(g, tol)
            else:
                groups.setdefault((g.profile, g.order), []).append(i)
        other = [p for p in self.panels if not p.is_constant]
        for (profile, order), idx in groups.items():
            idx = np.array(idx)
            c = np.array([tests[i].center for i in idx])
            r = np.array([tests[i].radius for i in idx])
            acc = np.zeros(len(idx))
            for x, w in self.atoms:
                acc += w * profile.derivative((x - c) / r, order) / r ** (order + 1)
            for p in self.panels:
                if not p.is_constant:
                    continue
                if order == 0:
                    span = profile.cdf((p.hi - c) / r) - profile.cdf((p.lo - c) / r)
                else:
                    span = (profile.derivative((p.hi - c) / r, order - 1)
                            - profile.derivative((p.lo - c) / r, order - 1)) / r ** order
                acc += p.density.constant_value() * span
            values[idx] += acc
            if other:
                rest = MeasureState(self.t, (), tuple(other))
                for i in idx:
                    v, e = rest.pair(tests[i], tol)
                    values[i] += v
                    errors[i] += e
        return values, errors

    def mass(self, lo=-math.inf, hi=math.inf, tol=1e-12):
        """``u([lo, hi])`` (finite windows, or panels of finite extent)."""
        total = sum(w for x, w in self.atoms if lo <= x <= hi)
        for p in self.panels:
            a, b = max(p.lo, lo), min(p.hi, hi)
            if b <= a:
                continue
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError("infinite mass window on an unbounded panel")
            if p.is_constant:
                total += p.density.constant_value() * (b - a)
                continue
            val, _ = integrate(p, a, b, tol=tol, breakpoints=p.breaks)
            total += val
        return float(total)

    def to_json(self):
        return {
            "t": float(self.t),
            "atoms": [[float(x), float(w)] for x, w in self.atoms],
            "density_panels": [p.to_json() for p in self.panels],
        }

    @classmethod
    def from_json(cls, data, params=None):
        atoms = tuple((float(x), float(w)) for x, w in data.get("atoms", ()))
        panels = tuple(
            DensityPanel(_from_num(p.get("lo", "-inf")), _from_num(p.get("hi", "inf")),
                         as_expr(p["density"], params))
            for p in data.get("density_panels", ())
        )
        return cls(float(data.get("t", 0.0)), atoms, panels)


def _antiderivative(g):
    """Closed-form antiderivative of a bump test function (or its derivatives)."""
    profile = getattr(g, "profile", None)
    order = getattr(g, "order", None)
    if profile is None or order is None or not hasattr(g, "center"):
        return None
    c, r = g.center, g.radius
    if order == 0:
        return lambda x: profile.cdf((x - c) / r)
    return lambda x: profile.derivative((x - c) / r, order - 1) / r ** order


def merge_atoms(atoms, rtol=1e-12):
    """Combine atoms at coincident locations; drop exactly-zero weights."""
    out = []
    for x, w in sorted(atoms):
        if out and abs(out[-1][0] - x) <= rtol * max(1.0, abs(x)):
            out[-1] = (out[-1][0], out[-1][1] + w)
        else:
            out.append((x, w))
    return tuple((x, w) for x, w in out if w != 0.0)


def _merge_panels(panels):
    if not panels:
        return []
    cuts = sorted({v for p in panels for v in (p.lo, p.hi)})
    merged = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        covering = [p for p in panels if p.lo <= lo and p.hi >= hi]
        if not covering:
            continue
        breaks = tuple(sorted({b for p in covering for b in p.breaks if lo < b < hi}))
        if len(covering) == 1:
            dens = covering[0].density
        elif all(p.is_expr for p in covering):
            params = {}
            for p in covering:
                params.update(p.density.params)
            dens = Expr(" + ".join(f"({p.density.text})" for p in covering), params)
        else:
            fs = [p for p in covering]
            dens = lambda y, fs=fs: sum(np.asarray(p(y)) for p in fs)
        merged.append(DensityPanel(lo, hi, dens, breaks))
    return merged
