"""Regularization nets, growth-rate fits and distributional shadows.

A coefficient is smoothed by convolution with ``rho_w(x) = rho(x/w)/w``,
where the width ``w`` is ``1/log(1/eps)`` on the logarithmic scale and
``eps`` on the power scale.  Piecewise-constant coefficients are smoothed
in closed form through the profile CDF.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence
from .pairing import pair_many
from .piecewise import SmoothCoefficient
from .profiles import EXP_BUMP
from .quadrature import NODES, KRONROD_WEIGHTS
from .transport import PullbackSolution

LOG = "log"
POWER = "power"
FIXED = "fixed"
SCALES = (LOG, POWER, FIXED)

DEFAULT_LADDER = tuple(2.0 ** -j for j in range(3, 11))


def smoothing_width(eps, scale=LOG):
    """Width of the smoothing kernel for ``eps`` on the given scale."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    if scale == LOG:
        return 1.0 / math.log(1.0 / eps)
    if scale == POWER:
        return float(eps)
    raise ValueError(f"unknown scale {scale!r}")


def _small_parameter(eps, scale):
    """The variable in which shadows are extrapolated affinely to zero."""
    eps = np.asarray(eps, dtype=float)
    if scale == LOG:
        return 1.0 / np.log(1.0 / eps)
    return eps


# {{{ mollification

class MollifiedCoefficient(SmoothCoefficient):
    """``x -> (a(t, .) * rho_w)(x)`` with exact derivatives up to order two."""

    def __init__(self, coeff, eps, scale=LOG, profile=EXP_BUMP):
        self.source = coeff
        self.eps = float(eps)
        self.scale = scale
        self.profile = profile
        self.width = smoothing_width(eps, scale)
        curves = tuple(getattr(coeff, "curves", ()))
        pieces = getattr(coeff, "pieces", None)
        self._closed = bool(getattr(coeff, "is_piecewise_constant", False))
        if self._closed:
            speeds = [p.constant_value() for p in pieces]
            self._base = speeds[0]
            self._jumps = np.diff(speeds)
        self._curves = curves
        self._affine = [c.affine for c in curves]
        try:
            bound = coeff.envelope(0.0, coeff.T if math.isfinite(coeff.T) else 1.0)
        except Exception:  # noqa: BLE001 - envelope is advisory
            bound = None
        super().__init__(self._value, self._slope, autonomous=coeff.is_autonomous, bound=bound,
                         name=f"{getattr(coeff, 'name', '') or 'a'}*rho[{scale},{eps:g}]",
                         regularity={"global": "smooth"})
        self.T = getattr(coeff, "T", math.inf)

    def comoving(self):
        """``(g, c, focus)`` with ``a(t, x) = g(x - c t)``, or ``None``.

        Available when every discontinuity curve moves at one common constant
        rate (or the source is autonomous); ``focus`` marks the smoothed layers.
        """
        w = self.width
        if self._closed and all(aff is not None for aff in self._affine):
            rates = {float(aff[1]) for aff in self._affine}
            if len(rates) > 1:
                return None
            c = rates.pop() if rates else 0.0
            focus = tuple((float(aff[0]), w) for aff in self._affine)
            return (lambda y: self.derivative(0.0, y, 0)), c, focus
        if self.is_autonomous:
            focus = tuple((float(aff[0]), w) for aff in self._affine if aff is not None)
            return (lambda y: self.derivative(0.0, y, 0)), 0.0, focus
        return None

    def _value(self, t, x):
        return self.derivative(t, x, 0)

    def _slope(self, t, x):
        return self.derivative(t, x, 1)

    def derivative(self, t, x, order=0):
        """``d^order/dx^order`` of the smoothed coefficient."""
        scalar = np.ndim(t) == 0 and np.ndim(x) == 0
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        if self._closed:
            out = self._closed_form(t, x, order)
        else:
            out = self._quadrature(t, x, order)
        return float(out) if scalar else out

    def _closed_form(self, t, x, order):
        w = self.width
        out = np.full(x.shape, self._base if order == 0 else 0.0)
        for jump, curve, aff in zip(self._jumps, self._curves, self._affine):
            xi = curve.position(t, 0.0) if aff is None else aff[0] + aff[1] * t
            z = (x - xi) / w
            if order == 0:
                out = out + jump * self.profile.cdf(z)
            else:
                out = out + jump * self.profile.derivative(z, order - 1) / w ** order
        return out

    def _quadrature(self, t, x, order):
        # w^-k * int a(t, x - w z) rho^(k)(z) dz, split where x - w z crosses a curve
        w = self.width
        edges = np.linspace(-1.0, 1.0, self.profile.quad_panels + 1)
        flat_t, flat_x = t.ravel(), x.ravel()
        total = np.zeros_like(flat_x)
        pieces = getattr(self.source, "pieces", None)
        if pieces is None:
            regions = [(None, None, lambda tt, yy: self.source(tt, yy))]
        else:
            pos = [c.position for c in self._curves]
            regions = []
            for i, piece in enumerate(pieces):
                left = pos[i - 1] if i > 0 else None
                right = pos[i] if i < len(pos) else None
                regions.append((left, right, piece))
        for left, right, fn in regions:
            # z-range where x - w z lies in (left, right)
            zlo = np.full_like(flat_x, -1.0)
            zhi = np.full_like(flat_x, 1.0)
            if right is not None:
                zlo = np.maximum(zlo, (flat_x - right(flat_t, 0.0)) / w)
            if left is not None:
                zhi = np.minimum(zhi, (flat_x - left(flat_t, 0.0)) / w)
            for a, b in zip(edges[:-1], edges[1:]):
                lo = np.clip(zlo, a, b)
                hi = np.clip(zhi, a, b)
                half = 0.5 * np.maximum(hi - lo, 0.0)
                if not np.any(half > 0):
                    continue
                mid = 0.5 * (lo + hi)
                z = mid[:, None] + half[:, None] * NODES[None, :]
                vals = np.asarray(fn(flat_t[:, None], flat_x[:, None] - w * z), dtype=float)
                kern = self.profile.derivative(z, order)
                total += half * ((vals * kern) @ KRONROD_WEIGHTS)
        return (total / w ** order).reshape(x.shape)


def mollify(coeff, eps, scale=LOG, profile=EXP_BUMP):
    """Smooth ``coeff`` by the kernel of width ``smoothing_width(eps, scale)``."""
    return MollifiedCoefficient(coeff, eps, scale, profile)

# }}}


# {{{ nets and growth fits

@dataclass
class GeneralizedNet:
    """Grid samples of a net ``(u_eps)`` and its first two spatial derivatives.

    ``values`` has shape ``(len(eps), 3, len(times), len(xs))``.
    """

    eps: tuple
    times: np.ndarray
    xs: np.ndarray
    values: np.ndarray
    scale: str = LOG

    def __post_init__(self):
        self.eps = tuple(float(e) for e in self.eps)
        self.values = np.asarray(self.values, dtype=float)
        if self.scale not in SCALES:
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.values.shape != (len(self.eps), 3, len(self.times), len(self.xs)):
            raise ValueError("net values do not match the shared grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("net values must be finite")

    def sup_norms(self, order=0, window=None):
        mask = np.ones(len(self.xs), dtype=bool)
        if window is not None:
            mask = (self.xs >= window[0]) & (self.xs <= window[1])
        return np.max(np.abs(self.values[:, order][:, :, mask]), axis=(1, 2))

    def __sub__(self, other):
        if self.eps != other.eps or not np.array_equal(self.xs, other.xs):
            raise ValueError("nets live on different ladders or grids")
        return GeneralizedNet(self.eps, self.times, self.xs, self.values - other.values,
                              self.scale)

    def to_csv(self, path, window=None):
        win = "" if window is None else f"[{window[0]:g},{window[1]:g}]"
        win = win or f"[{self.xs[0]:g},{self.xs[-1]:g}]"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("eps", "alpha", "sup_norm", "window"))
            for order in range(3):
                for e, s in zip(self.eps, self.sup_norms(order, window)):
                    w.writerow((repr(e), order, repr(float(s)), win))


def dyadic_grid(lo, hi, level=12):
    return np.linspace(lo, hi, 2 ** level + 1)


def coefficient_net(coeff, ladder=DEFAULT_LADDER, scale=LOG, T=1.0, window=(-2.0, 2.0),
                    profile=EXP_BUMP, n_times=5, level=12):
    """Net of smoothed coefficients sampled on a shared grid."""
    times = np.linspace(0.0, T, n_times)
    xs = dyadic_grid(*window, level)
    vals = np.zeros((len(ladder), 3, n_times, len(xs)))
    for i, e in enumerate(ladder):
        m = mollify(coeff, e, scale, profile)
        for order in range(3):
            vals[i, order] = m.derivative(times[:, None], xs[None, :], order)
    return GeneralizedNet(tuple(ladder), times, xs, vals, scale)


def function_net(fn, ladder=DEFAULT_LADDER, scale=FIXED, T=1.0, window=(-2.0, 2.0),
                 n_times=5, level=12):
    """Net from ``fn(eps, t, x, order)`` (an eps-independent ``fn`` gives a constant net)."""
    times = np.linspace(0.0, T, n_times)
    xs = dyadic_grid(*window, level)
    vals = np.zeros((len(ladder), 3, n_times, len(xs)))
    for i, e in enumerate(ladder):
        for order in range(3):
            vals[i, order] = fn(e, times[:, None], xs[None, :], order)
    return GeneralizedNet(tuple(ladder), times, xs, vals, scale)


@dataclass(frozen=True)
class GrowthFit:
    """Power-type and logarithmic-type fits of ``sup |d^alpha u_eps|``."""

    order: int
    exponent: float
    exponent_residual: float
    log_N: float
    log_C: float
    log_residual: float
    sup_norms: tuple

    @property
    def log_type(self):
        return self.log_residual <= 0.05

    def to_json(self):
        return {"alpha": self.order, "exponent": self.exponent,
                "exponent_residual": self.exponent_residual, "log_N": self.log_N,
                "log_C": self.log_C, "log_residual": self.log_residual,
                "log_type": self.log_type, "sup_norms": list(self.sup_norms)}


def growth_fit(eps, sups, order=0):
    """Slope of ``log sup`` against ``log(1/eps)`` and the fit ``sup ~ N log(C/eps)``."""
    eps = np.asarray(eps, dtype=float)
    sups = np.asarray(sups, dtype=float)
    if len(eps) < 4:
        raise ValueError("growth fits need at least four rungs")
    L = np.log(1.0 / eps)
    tiny = np.finfo(float).tiny
    logs = np.log(np.maximum(sups, tiny))
    slope, icpt = np.polyfit(L, logs, 1)
    resid = float(np.max(np.abs(slope * L + icpt - logs)))
    N, B = np.polyfit(L, sups, 1)
    scale = max(float(np.max(np.abs(sups))), tiny)
    log_res = float(np.max(np.abs(N * L + B - sups)) / scale)
    C = math.exp(B / N) if N > 0 and B / N < 700.0 else math.inf
    return GrowthFit(order, float(slope), resid, float(N), C, log_res, tuple(map(float, sups)))


def moderateness_exponent(net, order=0, window=None):
    """Fitted growth exponent ``p`` (``sup ~ eps^-p``) with the log-type test."""
    if not 0 <= order <= 2:
        raise ValueError("derivative order must be 0, 1 or 2")
    return growth_fit(net.eps, net.sup_norms(order, window), order)

# }}}


# {{{ regularized solutions and shadows

def solve_regularized(coeff_eps, u0, T, times=None, rtol=1e-9, atol=1e-11):
    """Characteristic solution of the smoothed problem, known through pairings."""
    comoving = getattr(coeff_eps, "comoving", None)
    method = "separable" if comoving is not None and comoving() is not None else "caratheodory"
    return PullbackSolution(coeff_eps, u0, T, "colombeau-shadow", method=method,
                            times=times, rtol=rtol, atol=atol)


@dataclass
class NetPairings:
    """Pairings of a regularized family: ``values[i, k, j]`` for ``eps[i]``, ``times[k]``, test ``j``."""

    eps: tuple
    times: tuple
    values: np.ndarray
    scale: str = LOG
    errors: np.ndarray = None


def regularized_pairings(coeff, u0, T, family, times, ladder=DEFAULT_LADDER, scale=LOG,
                         profile=EXP_BUMP, tol=1e-10, jobs=1):
    """Pair ``u_eps(t)`` against ``family`` for every rung of the ladder."""
    times = [float(t) for t in times]

    def rung(e):
        sol = solve_regularized(mollify(coeff, e, scale, profile), u0, T)
        return sol.pairing_matrix(family, times, tol)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(rung, ladder))
    else:
        results = [rung(e) for e in ladder]
    vals = np.array([r[0] for r in results])
    errs = np.array([r[1] for r in results])
    return NetPairings(tuple(ladder), tuple(times), vals, scale, errs)


@dataclass
class ShadowResult:
    extrapolated: np.ndarray
    identified: str | None
    distances: dict = field(default_factory=dict)
    increments: tuple = ()

    def to_json(self):
        return {"identified": self.identified, "distances": self.distances,
                "increments": list(self.increments),
                "extrapolated": np.asarray(self.extrapolated).tolist()}


def _candidate_pairings(cand, family, times):
    if hasattr(cand, "pairing_matrix"):
        return cand.pairing_matrix(family, list(times))[0]
    return np.array([pair_many(cand(t), family)[0] for t in times])


def shadow(net, family, candidates=None, tol=1e-3, cauchy_tol=0.05, fit_rungs=3):
    """Extrapolate the pairings of a net to ``eps -> 0`` and match candidates.

    The limit is the intercept of an affine fit in the small parameter over
    the last ``fit_rungs`` rungs.

    The Cauchy test requires the last increment along the ladder to be
    no larger than the first one and below ``cauchy_tol * (1 + max |pairing|)``.
    """
    vals = np.asarray(net.values, dtype=float)
    if vals.shape[0] < 4:
        raise ValueError("shadow extraction needs at least four rungs")
    incs = tuple(float(np.max(np.abs(vals[i + 1] - vals[i]))) for i in range(len(vals) - 1))
    bound = cauchy_tol * (1.0 + float(np.max(np.abs(vals))))
    if incs[-1] > bound or incs[-1] > incs[0] * (1.0 + 1e-9) + 1e-15:
        raise NoConvergence(f"pairings fail the Cauchy test along the ladder (increments {incs})")
    s = _small_parameter(net.eps, net.scale)
    keep = slice(max(0, len(s) - max(2, fit_rungs)), len(s))
    s = s[keep]
    flat = vals[keep].reshape(len(s), -1)
    design = np.vstack([np.ones_like(s), s]).T
    coef, *_ = np.linalg.lstsq(design, flat, rcond=None)
    extrap = coef[0].reshape(vals.shape[1:])
    distances = {}
    identified = None
    best = math.inf
    for name, cand in (candidates or {}).items():
        ref = _candidate_pairings(cand, family, net.times)
        d = float(np.max(np.abs(ref - extrap)))
        distances[name] = d
        if d <= tol and d < best:
            identified, best = name, d
    return ShadowResult(extrap, identified, distances, incs)

# }}}
