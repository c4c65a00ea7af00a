"""Symmetric bump profiles supported on [-1, 1].

Two profiles are provided: the classical ``exp(-1/(1-z^2))`` bump and a
polynomial ``(1-z^2)^k`` bump.  Both are normalized to unit mass and
expose derivatives and the cumulative distribution function.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicHermiteSpline

from .quadrature import integrate, panel_nodes, KRONROD_WEIGHTS


class Profile:
    """Base class; subclasses implement ``_raw`` and friends on ``|z| < 1``."""

    name = "profile"
    # GK15 panels on [-1, 1] that integrate the profile (times a smooth factor) to ~1e-9
    quad_panels = 32

    def __call__(self, z):
        return self._masked(z, self._rho)

    def d1(self, z):
        return self._masked(z, self._d1)

    def d2(self, z):
        return self._masked(z, self._d2)

    def derivative(self, z, order=0):
        return (self.__call__, self.d1, self.d2)[order](z)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        out = np.clip(z, -1.0, 1.0)
        res = self._cdf(out)
        res = np.where(z <= -1.0, 0.0, np.where(z >= 1.0, 1.0, res))
        return float(res) if res.ndim == 0 else res

    @staticmethod
    def _masked(z, fn):
        z = np.asarray(z, dtype=float)
        inside = np.abs(z) < 1.0
        out = np.zeros_like(z)
        if np.any(inside):
            out[inside] = fn(z[inside])
        return float(out) if out.ndim == 0 else out

    @property
    def peak(self):
        return float(self(0.0))

    def l2_norm(self):
        val, _ = integrate(lambda z: self(z) ** 2, -1.0, 1.0, tol=1e-15)
        return math.sqrt(val)


class ExpBump(Profile):
    """``rho(z) = exp(-1/(1-z^2)) / N`` with a Hermite-tabulated CDF."""

    name = "exp"

    def __init__(self, table_size=4001):
        raw = lambda z: np.exp(-1.0 / (1.0 - z * z))
        mass, _ = integrate(lambda z: self._masked(z, raw), -1.0, 1.0, tol=1e-16)
        self._norm = 1.0 / mass
        # cumulative table: exact panel integrals between table nodes
        knots = np.linspace(-1.0, 1.0, table_size)
        lo, hi = knots[:-1], knots[1:]
        nodes = panel_nodes(lo, hi)
        pieces = (self(nodes) * KRONROD_WEIGHTS).sum(axis=1) * 0.5 * (hi - lo)
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        # enforce exact symmetry F(z) + F(-z) = 1
        cum = 0.5 * (cum + 1.0 - cum[::-1])
        self._spline = CubicHermiteSpline(knots, cum, self(knots))

    def _rho(self, z):
        return self._norm * np.exp(-1.0 / (1.0 - z * z))

    def _d1(self, z):
        s = 1.0 - z * z
        return self._rho(z) * (-2.0 * z / s ** 2)

    def _d2(self, z):
        s = 1.0 - z * z
        g1 = -2.0 * z / s ** 2
        g2 = -2.0 * (1.0 + 3.0 * z * z) / s ** 3
        return self._rho(z) * (g1 * g1 + g2)

    def _cdf(self, z):
        return self._spline(z)


class PolyBump(Profile):
    """``rho(z) = c_k (1 - z^2)^k`` with an exact polynomial CDF."""

    quad_panels = 4

    def __init__(self, k=4):
        self.k = int(k)
        self.name = f"poly{self.k}"
        base = Polynomial([1.0, 0.0, -1.0]) ** self.k
        scale = math.gamma(self.k + 1.5) / (math.sqrt(math.pi) * math.gamma(self.k + 1))
        self._p = base * scale
        self._dp = self._p.deriv()
        self._ddp = self._p.deriv(2)
        anti = self._p.integ()
        self._cum = anti - anti(-1.0)

    def _rho(self, z):
        return self._p(z)

    def _d1(self, z):
        return self._dp(z)

    def _d2(self, z):
        return self._ddp(z)

    def _cdf(self, z):
        return self._cum(z)


class ScaledProfile(Profile):
    """A profile multiplied by a constant (e.g. unit L2 norm instead of unit mass)."""

    def __init__(self, base, factor, name=None):
        self.base = base
        self.quad_panels = base.quad_panels
        self.factor = float(factor)
        self.name = name or f"{base.name}*{self.factor:g}"

    def _rho(self, z):
        return self.factor * self.base._rho(z)

    def _d1(self, z):
        return self.factor * self.base._d1(z)

    def _d2(self, z):
        return self.factor * self.base._d2(z)

    def _cdf(self, z):
        return self.factor * self.base._cdf(z)

    def cdf(self, z):
        return self.factor * self.base.cdf(z)


EXP_BUMP = ExpBump()
POLY_BUMP = PolyBump(4)
DEFAULT_PROFILES = (EXP_BUMP, POLY_BUMP)


def l2_unit(profile=EXP_BUMP):
    """The profile rescaled to unit L2 norm."""
    return ScaledProfile(profile, 1.0 / profile.l2_norm(), name=f"{profile.name}-l2")
