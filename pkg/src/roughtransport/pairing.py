"""Test functions and weak pairings."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .profiles import EXP_BUMP, Profile
from .quadrature import CompositeRule

DEFAULT_CENTERS = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
DEFAULT_RADII = (0.25, 1.0)


@dataclass(frozen=True)
class TestFunction:
    """``phi(x) = rho((x - center)/radius)/radius`` or one of its derivatives."""

    __test__ = False  # not a pytest class

    center: float
    radius: float
    profile: Profile = EXP_BUMP
    order: int = 0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.order not in (0, 1, 2):
            raise ValueError("derivative order must be 0, 1 or 2")

    @property
    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    @property
    def degree(self):
        """Smoothness order of the profile (``inf`` for the exponential bump)."""
        k = getattr(self.profile, "k", None)
        return math.inf if k is None else k - 1

    @property
    def phi_id(self):
        tag = "" if self.order == 0 else "'" * self.order
        return f"b({self.center:g},{self.radius:g}){tag}"

    def __call__(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.radius
        return self.profile.derivative(z, self.order) / self.radius ** (self.order + 1)

    def derivative(self, k=1):
        return TestFunction(self.center, self.radius, self.profile, self.order + k)

    @property
    def quadrature(self):
        """Composite Gauss-Kronrod rule over the support (8 panels)."""
        lo, hi = self.support
        return CompositeRule.on_panels(np.linspace(lo, hi, 9))


def make_bump(center, radius, profile=EXP_BUMP):
    """Normalized smooth bump supported on ``[center - radius, center + radius]``."""
    return TestFunction(float(center), float(radius), profile)


def default_family(centers=DEFAULT_CENTERS, radii=DEFAULT_RADII):
    return [make_bump(c, r) for c in centers for r in radii]


@dataclass(frozen=True)
class SpaceTimeTest:
    """Tensor product ``tau(t) psi(x)`` of a time bump and a space bump."""

    __test__ = False

    time: TestFunction
    space: TestFunction

    @property
    def phi_id(self):
        return f"{self.space.phi_id}@t({self.time.center:g},{self.time.radius:g})"

    def __call__(self, t, x):
        return self.time(t) * self.space(x)


def default_space_time_family(T, centers=DEFAULT_CENTERS, radii=DEFAULT_RADII):
    """Time bumps on ``(0, T)``, ``(0, T/2)``, ``(T/2, T)`` times the spatial family."""
    slabs = [make_bump(T / 2, T / 2), make_bump(T / 4, T / 4), make_bump(3 * T / 4, T / 4)]
    return [SpaceTimeTest(tau, psi) for tau in slabs for psi in default_family(centers, radii)]


class FunctionOnSupport:
    """Wrap a callable with an explicit support for use in :func:`pair`."""

    def __init__(self, fn, support):
        self.fn = fn
        self.support = (float(support[0]), float(support[1]))

    def __call__(self, x):
        return self.fn(x)


def pair(u, phi, tol=1e-10):
    """``<u, phi>`` with an error estimate."""
    return u.pair(phi, tol=tol)


def pair_many(u, tests, tol=1e-10):
    """``(values, errors)`` arrays of ``<u, phi>`` over ``tests``."""
    if hasattr(u, "pair_family"):
        return u.pair_family(list(tests), tol)
    out = np.array([u.pair(phi, tol) for phi in tests], dtype=float).reshape(-1, 2)
    return out[:, 0], out[:, 1]


@dataclass(frozen=True)
class PairingRow:
    phi_id: str
    center: float
    radius: float
    t: float
    value: float
    err: float


@dataclass
class PairingTable:
    """Rows of ``(phi_id, center, radius, t, value, err)``."""

    rows: list = field(default_factory=list)

    COLUMNS = ("phi_id", "center", "radius", "t", "value", "err")

    def add(self, phi, t, value, err):
        space = phi.space if isinstance(phi, SpaceTimeTest) else phi
        self.rows.append(PairingRow(phi.phi_id, space.center, space.radius, float(t),
                                    float(value), float(err)))

    def values(self):
        return np.array([r.value for r in self.rows])

    def errors(self):
        return np.array([r.err for r in self.rows])

    def max_abs(self):
        return float(np.max(np.abs(self.values()))) if self.rows else 0.0

    def max_err(self):
        return float(np.max(self.errors())) if self.rows else 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([r.phi_id, repr(r.center), repr(r.radius), repr(r.t),
                            repr(r.value), repr(r.err)])

    def to_json(self):
        return [dict(zip(self.COLUMNS, (r.phi_id, r.center, r.radius, r.t, r.value, r.err)))
                for r in self.rows]

    def __len__(self):
        return len(self.rows)


def pairing_table(u, family, times=None, tol=1e-10):
    """Pair a state or a time-dependent solution against a family.

    ``u`` is either a fixed state (its pairings are repeated at every
    requested time) or an object with ``pairing_matrix(family, times, tol)``.
    """
    table = PairingTable()
    if hasattr(u, "pairing_matrix"):
        times = list(u.times if times is None else times)
        vals, errs = u.pairing_matrix(family, times, tol)
        for i, t in enumerate(times):
            for j, phi in enumerate(family):
                table.add(phi, t, vals[i, j], errs[i, j])
        return table
    cached = zip(*pair_many(u, family, tol))
    cached = list(cached)
    for t in ([getattr(u, "t", 0.0)] if times is None else times):
        for phi, (v, e) in zip(family, cached):
            table.add(phi, t, v, e)
    return table


def distribution_distance(u, v, family, times=None, tol=1e-10):
    """Max over the family (and times) of ``|<u - v, phi>|``."""
    if not family:
        raise ValueError("family must be nonempty")
    if times is None:
        times = getattr(u, "times", None)
        if times is None:
            times = getattr(v, "times", None)
    a = pairing_table(u, family, times, tol).values()
    b = pairing_table(v, family, times, tol).values()
    return float(np.max(np.abs(a - b)))
