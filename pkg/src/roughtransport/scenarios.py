"""Scenario files: parsing, object builders and the builtin registry.

A scenario is a JSON object::

    {
      "id": "pr-moving-jump",
      "description": "...",
      "params": {"c1": 2, "c2": -1, "alpha": 0.5},
      "coefficient": {"pieces": ["c1", "c2"], "curves": ["alpha*t"]},
      "u0": {"density_panels": [{"lo": -1, "hi": 1, "density": "(1-x**2)**2"}]},
      "T": 1.0,
      "candidates": {"name": {"atoms": [["alpha*t", "t"]], "density_panels": [...]}},
      "stages": [{"kind": "solve", "concept": "poupaud-rascle", "candidate": "name"}]
    }

Stages may override ``coefficient``, ``u0`` and ``params`` locally.  See
:data:`STAGE_KINDS` for the recognised kinds and README for their keys.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .energy import ProbeCoefficient, holder_coefficient, lipschitz_control, log_coefficient
from .errors import ParseError
from .expr import Expr
from .measures import DensityPanel, MeasureState, merge_atoms
from .pairing import make_bump
from .piecewise import PiecewiseCoefficient
from .semigroup import Indicator

STAGE_KINDS = ("solve", "residual", "pr-product", "diamond", "model-product", "shadow",
               "growth", "flow", "classify", "energy", "garding", "semigroup")

_STAGE_REQUIRED = {
    "solve": ("concept",),
    "residual": ("concept", "product", "expect"),
    "pr-product": ("candidate",),
    "diamond": ("t", "u", "expect"),
    "model-product": ("u", "v", "expect"),
    "shadow": ("candidate",),
    "growth": ("expect",),
    "flow": ("check",),
    "classify": ("expect",),
    "energy": (),
    "garding": ("probe",),
    "semigroup": ("f",),
}


# -- value helpers -----------------------------------------------------------------

def _number(value, params, t=0.0):
    """A float from a number, ``"inf"``-like text or a constant expression."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        if text in ("inf", "+inf", "-inf"):
            return float(text)
        return float(Expr(text, params)(t, 0.0))
    raise ParseError(f"expected a number or an expression, got {value!r}")


def parse_complex(value):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    try:
        return complex(str(value).replace(" ", ""))
    except ValueError:
        raise ParseError(f"not a complex number: {value!r}") from None


def ladder_from_json(cfg, eps_min=None):
    """``{"base": 2, "exponents": [...]}`` or ``{"values": [...]}`` (or a bare list)."""
    if cfg is None:
        return None
    if isinstance(cfg, list):
        values = [float(v) for v in cfg]
    elif "values" in cfg:
        values = [float(v) for v in cfg["values"]]
    elif "exponents" in cfg:
        base = float(cfg.get("base", 2.0))
        values = [base ** -float(j) for j in cfg["exponents"]]
    else:
        raise ParseError("a ladder needs 'values' or 'exponents'")
    if any(not (0.0 < v < 1.0) for v in values):
        raise ParseError("ladder rungs must lie in (0, 1)")
    if eps_min is not None:
        values = [v for v in values if v >= eps_min]
    return tuple(sorted(values, reverse=True))


# -- builders -------------------------------------------------------------------------

def build_coefficient(cfg, params=None, T=math.inf, name=""):
    """Coefficient object from its JSON description.

    Recognised shapes: piecewise (``pieces``/``curves``), a probe coefficient
    (``probe``) and a planar field (``planar``).
    """
    from .applicability import PlanarField

    params = dict(params or {})
    if not isinstance(cfg, dict):
        raise ParseError(f"coefficient description must be an object, got {type(cfg).__name__}")
    if "planar" in cfg:
        p = cfg["planar"]
        try:
            return PlanarField.from_text(p["a1"], p["a2"], p["div"], params,
                                         regularity=p.get("regularity"), c=p.get("c"),
                                         box=tuple(p.get("box", (-2.5, 2.5))))
        except KeyError as exc:
            raise ParseError(f"planar field needs {exc}") from None
        except (SyntaxError, ValueError) as exc:
            raise ParseError(str(exc)) from None
    if "probe" in cfg:
        return build_probe(cfg, params)
    if "pieces" not in cfg:
        raise ParseError("coefficient description needs 'pieces'")
    return PiecewiseCoefficient(
        cfg["pieces"], cfg.get("curves", ()), prescribed=cfg.get("prescribed"),
        regularity=cfg.get("regularity"), bounds=cfg.get("bounds"),
        T=cfg.get("T", T), name=cfg.get("name", name), params=params,
        derivatives=cfg.get("derivatives"))


def build_probe(cfg, params=None):
    kind = cfg["probe"]
    if kind == "holder":
        return holder_coefficient(_number(cfg.get("alpha", 0.75), params))
    if kind == "lipschitz":
        return lipschitz_control()
    if kind == "log":
        return log_coefficient()
    if kind == "expr":
        e = Expr(cfg["expr"], params)
        return ProbeCoefficient(lambda x: e(0.0, x), [_number(b, params) for b in cfg.get("breaks", ())],
                                e.text)
    raise ParseError(f"unknown probe coefficient {kind!r}")


def _atom(entry, params, t, u0):
    if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
        raise ParseError(f"an atom is a [position, weight] pair, got {entry!r}")
    x = _number(entry[0], params, t)
    w = entry[1]
    if isinstance(w, dict):
        if "mass" not in w or u0 is None:
            raise ParseError("an atom weight object needs 'mass' and an initial datum")
        lo, hi = (_number(v, params, t) for v in w["mass"])
        w = u0.mass(lo, hi) if hi > lo else 0.0
    else:
        w = _number(w, params, t)
    return x, w


def build_state(cfg, params=None, t=0.0, u0=None):
    """Measure state at time ``t``; expressions may use ``t`` and parameters."""
    params = dict(params or {})
    if not isinstance(cfg, dict):
        raise ParseError("a measure cfg must be an object")
    unknown = set(cfg) - {"atoms", "density_panels"}
    if unknown:
        raise ParseError(f"unknown measure keys {sorted(unknown)}")
    atoms = [_atom(a, params, t, u0) for a in cfg.get("atoms", ())]
    panels = []
    for p in cfg.get("density_panels", ()):
        if "density" not in p:
            raise ParseError("a density panel needs 'density'")
        lo = _number(p.get("lo", "-inf"), params, t)
        hi = _number(p.get("hi", "inf"), params, t)
        if hi <= lo:
            continue
        dens = Expr(p["density"], params).at_time(t)
        if dens.is_constant:
            dens = Expr(repr(dens.constant_value()))
        breaks = tuple(sorted({_number(b, params, t) for b in p.get("breaks", ())}))
        panels.append(DensityPanel(lo, hi, dens, tuple(b for b in breaks if lo < b < hi)))
    return MeasureState(float(t), merge_atoms(atoms), tuple(panels))


def build_candidate(cfg, params=None, u0=None):
    """``t -> MeasureState`` from a closed-form cfg (validated at ``t = 0``)."""
    params = dict(params or {})
    build_state(cfg, params, 0.0, u0)
    return lambda t: build_state(cfg, params, float(t), u0)


def build_test_function(cfg, params=None):
    """``{"bump": [center, radius]}`` or ``{"indicator": [lo, hi]}``."""
    if "bump" in cfg:
        c, r = (_number(v, params) for v in cfg["bump"])
        return make_bump(c, r)
    if "indicator" in cfg:
        lo, hi = (_number(v, params) for v in cfg["indicator"])
        return Indicator(lo, hi)
    raise ParseError(f"unknown test function cfg {cfg!r}")


# -- scenario ----------------------------------------------------------------------------

@dataclass
class Scenario:
    id: str
    description: str
    coefficient: dict
    u0: dict
    T: float
    stages: list
    params: dict = field(default_factory=dict)
    candidates: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    ladder: object = None
    b: object = None
    c: object = None
    f: object = None
    theories: tuple = ()
    products: tuple = ()
    source: str = "builtin"

    def stage_params(self, stage):
        return {**self.params, **stage.get("params", {})}

    def stage_coefficient(self, stage):
        cfg = stage.get("coefficient", self.coefficient)
        return build_coefficient(cfg, self.stage_params(stage), self.T, self.id)

    def stage_datum(self, stage):
        return build_state(stage.get("u0", self.u0), self.stage_params(stage))

    def candidate(self, name, stage):
        if name not in self.candidates:
            raise ParseError(f"unknown candidate {name!r}")
        return build_candidate(self.candidates[name], self.stage_params(stage),
                               self.stage_datum(stage))

    def to_json(self):
        out = {"id": self.id, "description": self.description, "params": self.params,
               "coefficient": self.coefficient, "u0": self.u0, "T": self.T,
               "candidates": self.candidates, "stages": self.stages}
        for key in ("tolerances", "ladder", "b", "c", "f", "theories", "products"):
            val = getattr(self, key)
            if val:
                out[key] = list(val) if isinstance(val, tuple) else val
        return out


def _check_stage(stage, index, scenario):
    if not isinstance(stage, dict) or "kind" not in stage:
        raise ParseError(f"stage {index} needs a 'kind'")
    kind = stage["kind"]
    if kind not in STAGE_KINDS:
        raise ParseError(f"stage {index}: unknown kind {kind!r}")
    missing = [k for k in _STAGE_REQUIRED[kind] if k not in stage]
    if missing:
        raise ParseError(f"stage {index} ({kind}) is missing {missing}")
    for key in ("candidate", "second_factor"):
        if key in stage and stage[key] not in scenario.candidates:
            raise ParseError(f"stage {index}: unknown candidate {stage[key]!r}")
    stage.setdefault("name", f"{index:02d}-{kind}")


def parse_scenario(data, source="file"):
    """Validate a scenario object and build every referenced expression once."""
    if not isinstance(data, dict):
        raise ParseError("a scenario must be a JSON object")
    for key in ("id", "coefficient", "u0", "stages"):
        if key not in data:
            raise ParseError(f"scenario is missing {key!r}")
    data = copy.deepcopy(data)
    try:
        T = float(data.get("T", 1.0))
    except (TypeError, ValueError):
        raise ParseError(f"T must be a number, got {data.get('T')!r}") from None
    if not T > 0:
        raise ParseError("T must be positive")
    sc = Scenario(
        id=str(data["id"]), description=str(data.get("description", "")),
        coefficient=data["coefficient"], u0=data["u0"], T=T, stages=list(data["stages"]),
        params=dict(data.get("params", {})), candidates=dict(data.get("candidates", {})),
        tolerances=dict(data.get("tolerances", {})), ladder=data.get("ladder"),
        b=data.get("b"), c=data.get("c"), f=data.get("f"),
        theories=tuple(data.get("theories", ())), products=tuple(data.get("products", ())),
        source=source)
    if not sc.stages:
        raise ParseError("a scenario needs at least one stage")
    names = set()
    for i, stage in enumerate(sc.stages):
        _check_stage(stage, i, sc)
        if stage["name"] in names:
            raise ParseError(f"duplicate stage name {stage['name']!r}")
        names.add(stage["name"])
    _validate_objects(sc)
    ladder_from_json(sc.ladder)
    return sc


def _validate_objects(sc):
    """Build coefficients, data and candidates so bad expressions fail at load time."""
    for stage in sc.stages:
        params = sc.stage_params(stage)
        cfg = stage.get("coefficient", sc.coefficient)
        if stage["kind"] != "garding" and cfg is not None:
            sc.stage_coefficient(stage)
        u0 = sc.stage_datum(stage)
        for name, cand in sc.candidates.items():
            build_candidate(cand, params, u0)
        for key in ("u", "v"):
            if key in stage:
                build_state(stage[key], params, 0.0)
        if "f" in stage:
            build_test_function(stage["f"], params)
        if stage["kind"] == "garding":
            build_probe(stage["probe"], params)
        ladder_from_json(stage.get("ladder"))


def load_scenario(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return parse_scenario(data, source=str(path))


# -- builtin registry ------------------------------------------------------------------

_ONE = {"density_panels": [{"density": "1"}]}
_BUMP = {"density_panels": [{"lo": -1, "hi": 1, "density": "(1-x**2)**2"}]}
_LOG_LADDER = {"base": 2, "exponents": [128, 256, 512, 1000]}

_MOVING = {"pieces": ["c1", "c2"], "curves": ["alpha*t"]}
_MOVING_PRESCRIBED = {"pieces": ["c1", "c2"], "curves": ["alpha*t"], "prescribed": {"0": "alpha"}}

_CHI = ("bumpcdf((x+1.5)/0.5)*bumpcdf((1.5-x)/0.5)"
        "*bumpcdf((y+1.5)/0.5)*bumpcdf((1.5-y)/0.5)")
_DCHI = ("(bump((x+1.5)/0.5)/0.5*bumpcdf((1.5-x)/0.5)"
         " - bumpcdf((x+1.5)/0.5)*bump((1.5-x)/0.5)/0.5)*bumpcdf((y+1.5)/0.5)*bumpcdf((1.5-y)/0.5)"
         " + bumpcdf((x+1.5)/0.5)*bumpcdf((1.5-x)/0.5)"
         "*(bump((y+1.5)/0.5)/0.5*bumpcdf((1.5-y)/0.5) - bumpcdf((y+1.5)/0.5)*bump((1.5-y)/0.5)/0.5)")


def _planar(sigma):
    # a = -(1/sigma) (x-y)_+^sigma (1, 1) chi: the two singular derivative terms cancel in div a
    field_ = f"-(1/sigma)*pow(pos(x-y),sigma)*{_CHI}"
    return {"planar": {
        "a1": field_, "a2": field_, "div": f"-(1/sigma)*pow(pos(x-y),sigma)*({_DCHI})",
        "regularity": {"continuous": True,
                       "gradient_singularity": {"exponent": 1.0 - sigma, "codim": 1}}}}


BUILTIN = [
    {
        "id": "pr-neg-sign",
        "description": "a = -sign(x), u0 = 1: flow solution 1 + 2t delta, flow product -sign",
        "coefficient": {"pieces": ["1", "-1"], "curves": ["0"]},
        "u0": _ONE, "T": 1.0,
        "candidates": {
            "1+2t*delta": {"atoms": [["0", "2*t"]], "density_panels": [{"density": "1"}]},
            "-sign": {"density_panels": [{"hi": 0, "density": "1"}, {"lo": 0, "density": "-1"}]},
            "1": _ONE,
        },
        "stages": [
            {"kind": "solve", "name": "pushforward", "concept": "poupaud-rascle",
             "candidate": "1+2t*delta", "tol": 1e-8},
            {"kind": "residual", "name": "flow-product-residual", "concept": "poupaud-rascle",
             "product": "pr", "expect": "pass", "tol": 1e-8},
            {"kind": "pr-product", "name": "flow-product", "second_factor": "1+2t*delta",
             "candidate": "-sign", "tol": 1e-6},
            {"kind": "shadow", "name": "regularized", "ladder": _LOG_LADDER, "scale": "log",
             "candidate": "1+2t*delta", "tol": 1e-3, "times": [0.5, 1.0]},
            {"kind": "flow", "name": "semigroup", "check": "composition", "tol": 1e-9},
            {"kind": "classify", "name": "theories", "label": "-sign",
             "expect": {"forward-uniqueness": "applies", "hurd-sattinger": "fails"}},
        ],
    },
    {
        "id": "pr-delta-data",
        "description": "a = -sign(x), u0 = delta: the atom stays put and (-sign) . delta = 0",
        "coefficient": {"pieces": ["1", "-1"], "curves": ["0"]},
        "u0": {"atoms": [[0, 1]]}, "T": 1.0,
        "candidates": {"delta": {"atoms": [["0", "1"]]}, "0": {}},
        "stages": [
            {"kind": "solve", "name": "pushforward", "concept": "poupaud-rascle",
             "candidate": "delta", "tol": 1e-8},
            {"kind": "pr-product", "name": "flow-product", "second_factor": "delta",
             "candidate": "0", "tol": 1e-6},
        ],
    },
    {
        "id": "pr-2H",
        "description": "a = 2H(-x), u0 = 1: flow solution 1 + 2t delta, flow product 2H(-x)",
        "coefficient": {"pieces": ["2", "0"], "curves": ["0"]},
        "u0": _ONE, "T": 1.0,
        "candidates": {
            "1+2t*delta": {"atoms": [["0", "2*t"]], "density_panels": [{"density": "1"}]},
            "2H(-x)": {"density_panels": [{"hi": 0, "density": "2"}]},
        },
        "stages": [
            {"kind": "solve", "name": "pushforward", "concept": "poupaud-rascle",
             "candidate": "1+2t*delta", "tol": 1e-8},
            {"kind": "pr-product", "name": "flow-product", "second_factor": "1+2t*delta",
             "candidate": "2H(-x)", "tol": 1e-6},
        ],
    },
    {
        "id": "pr-moving-jump",
        "description": "jump from c1 to c2 along x = alpha t, smooth bump datum",
        "params": {"c1": 2.0, "c2": -1.0, "alpha": 0.5},
        "coefficient": _MOVING,
        "u0": _BUMP, "T": 1.0,
        "candidates": {"closed-form": {
            "atoms": [["alpha*t", {"mass": ["-t*(c1-alpha)", "t*(alpha-c2)"]}]],
            "density_panels": [
                {"hi": "alpha*t", "density": "pos(1-(x-c1*t)**2)**2",
                 "breaks": ["c1*t-1", "c1*t+1"]},
                {"lo": "alpha*t", "density": "pos(1-(x-c2*t)**2)**2",
                 "breaks": ["c2*t-1", "c2*t+1"]},
            ]}},
        "stages": [
            {"kind": "solve", "name": "pushforward", "concept": "poupaud-rascle",
             "candidate": "closed-form", "tol": 1e-8},
            {"kind": "flow", "name": "sliding", "check": "sliding", "tol": 1e-12},
        ],
    },
    {
        "id": "bj-moving-jump",
        "description": "moving jump with on-curve value alpha = (c1+c2)/2: u = 1 + t(c1-c2) delta",
        "params": {"c1": 2.0, "c2": -1.0, "alpha": 0.5},
        "coefficient": _MOVING_PRESCRIBED,
        "u0": _ONE, "T": 1.0,
        "candidates": {
            "1+t(c1-c2)*delta": {"atoms": [["alpha*t", "t*(c1-c2)"]],
                                 "density_panels": [{"density": "1"}]},
        },
        "stages": [
            {"kind": "solve", "name": "solution", "concept": "bouchut-james",
             "candidate": "1+t(c1-c2)*delta", "tol": 1e-8},
            {"kind": "residual", "name": "diamond-residual", "concept": "bouchut-james",
             "product": "diamond", "expect": "pass", "tol": 1e-8},
            {"kind": "residual", "name": "model-residual", "concept": "bouchut-james",
             "product": "model", "expect": "pass", "tol": 1e-8},
            {"kind": "residual", "name": "model-residual-off-centre", "concept": "bouchut-james",
             "product": "model", "expect": "fail", "tol": 1e-8, "margin_factor": 0.1,
             "params": {"alpha": 1.25}},
            {"kind": "diamond", "name": "on-curve-atom", "t": 0.5, "u": {"atoms": [["alpha*t", 1]]},
             "expect": {"atoms": [["alpha*t", "alpha"]]}},
            {"kind": "classify", "name": "theories", "label": "moving jump",
             "expect": {"bouchut-james": "applies"}},
        ],
    },
    {
        "id": "bj-heaviside",
        "description": "a = H(-x) with on-curve value 0: u = 1 + t delta solves with the diamond product",
        "coefficient": {"pieces": ["1", "0"], "curves": ["0"], "prescribed": {"0": "0"}},
        "u0": _ONE, "T": 1.0,
        "candidates": {"1+t*delta": {"atoms": [["0", "t"]], "density_panels": [{"density": "1"}]}},
        "stages": [
            {"kind": "solve", "name": "solution", "concept": "bouchut-james",
             "candidate": "1+t*delta", "tol": 1e-8},
            {"kind": "residual", "name": "diamond-residual", "concept": "bouchut-james",
             "product": "diamond", "expect": "pass", "tol": 1e-8},
            {"kind": "residual", "name": "model-residual", "concept": "bouchut-james",
             "product": "model", "expect": "fail", "tol": 1e-8},
        ],
    },
    {
        "id": "lo-heaviside-shadow",
        "description": "log-scale smoothing of H(-x), u0 = 1: shadow 1 + t delta, log-type growth",
        "coefficient": {"pieces": ["1", "0"], "curves": ["0"]},
        "u0": _ONE, "T": 1.0,
        "candidates": {
            "1+t*delta": {"atoms": [["0", "t"]], "density_panels": [{"density": "1"}]},
            "1": _ONE,
        },
        "stages": [
            {"kind": "shadow", "name": "shadow", "ladder": _LOG_LADDER, "scale": "log",
             "candidate": "1+t*delta", "tol": 1e-3, "times": [0.5, 1.0]},
            {"kind": "growth", "name": "log-scale-growth", "scale": "log", "order": 1,
             "expect": "log-type", "tol": 0.05},
            {"kind": "growth", "name": "power-scale-growth", "scale": "power", "order": 1,
             "expect": "power-type", "min_slope": 0.5},
            {"kind": "classify", "name": "theories", "label": "H(-x)",
             "expect": {"hurd-sattinger": "fails", "diperna-lions-existence": "fails",
                        "diperna-lions-uniqueness": "fails", "lafon-oberguggenberger": "applies"}},
        ],
    },
    {
        "id": "hs-sign",
        "description": "a = sign(x): expansive jump, backward unique but not forward unique",
        "coefficient": {"pieces": ["-1", "1"], "curves": ["0"]},
        "u0": _ONE, "T": 1.0,
        "stages": [
            {"kind": "classify", "name": "theories", "label": "sign",
             "expect": {"hurd-sattinger": "applies", "forward-uniqueness": "fails"}},
            {"kind": "solve", "name": "pushforward", "concept": "poupaud-rascle",
             "expect_error": "ForwardUniquenessViolated"},
        ],
    },
    {
        "id": "dpl-2d-holder",
        "description": "planar Hoelder field (x-y)_+^sigma: renormalized theory vs Hoelder exponent",
        "params": {"sigma": 0.75},
        "coefficient": _planar(0.75),
        "u0": _ONE, "T": 1.0,
        "stages": [
            {"kind": "classify", "name": "sigma-0.75", "label": "2-d sigma=0.75", "p": 2,
             "expect": {"diperna-lions-existence": "applies", "hurd-sattinger": "fails",
                        "diperna-lions-uniqueness": "applies"}},
            {"kind": "classify", "name": "sigma-0.3", "label": "2-d sigma=0.3", "p": 2,
             "params": {"sigma": 0.3}, "coefficient": _planar(0.3),
             "expect": {"diperna-lions-existence": "applies", "hurd-sattinger": "fails",
                        "diperna-lions-uniqueness": "fails"}},
        ],
    },
    {
        "id": "garding-holder",
        "description": "probe <a v', v> for a = 1 + x_+^0.75 and a Lipschitz control",
        "coefficient": {"pieces": ["1"]},
        "u0": _ONE, "T": 1.0,
        "stages": [
            {"kind": "garding", "name": "holder", "probe": {"probe": "holder", "alpha": 0.75},
             "slope": -0.25, "tol": 0.05, "sign": -1},
            {"kind": "garding", "name": "lipschitz-control", "probe": {"probe": "lipschitz"},
             "lipschitz": 1.0, "tol": 1e-8},
        ],
    },
    {
        "id": "garding-log",
        "description": "probe for a = -x log|x| rho(x): negative, growing like log(1/eps)",
        "coefficient": {"pieces": ["1"]},
        "u0": _ONE, "T": 1.0,
        "stages": [
            {"kind": "garding", "name": "log", "probe": {"probe": "log"}, "sign": -1,
             "log_type": True, "tol": 0.05},
        ],
    },
    {
        "id": "energy-smooth",
        "description": "energy bound for a = 1 and a = tanh(x) with a bump datum",
        "coefficient": {"pieces": ["tanh(x)"], "derivatives": ["1/cosh(x)**2"]},
        "u0": _BUMP, "T": 2.0,
        "stages": [
            {"kind": "energy", "name": "constant", "coefficient": {"pieces": ["1"]}, "tol": 1e-8},
            {"kind": "energy", "name": "tanh", "tol": 1e-8},
            {"kind": "classify", "name": "theories", "label": "tanh",
             "expect": {"caratheodory": "applies", "forward-uniqueness": "applies",
                        "filippov-basic": "applies", "bouchut-james": "applies",
                        "hurd-sattinger": "applies", "diperna-lions-existence": "applies",
                        "diperna-lions-uniqueness": "applies",
                        "lafon-oberguggenberger": "applies"}},
        ],
    },
    {
        "id": "semigroup-jump",
        "description": "a = 1 + H(x): resolvent powers, weak residual and Laplace transform",
        "coefficient": {"pieces": ["1", "2"], "curves": ["0"]},
        "u0": _ONE, "T": 1.0,
        "stages": [
            {"kind": "semigroup", "name": "resolvent", "window": [-4, 100], "f": {"bump": [0, 1]},
             "mus": [[1, 0], [2, 0], [1, 1]], "ks": [1, 2, 3, 4, 5], "tol": 1e-8,
             "residual_tol": 1e-6, "laplace_tol": 1e-6, "points": [-0.5, 0.3, 2.0, 5.0],
             "composition_tol": 1e-9},
        ],
    },
    {
        "id": "model-products",
        "description": "model products [H . delta] = delta/2 and [delta . delta] (no limit)",
        "coefficient": {"pieces": ["1"]},
        "u0": _ONE, "T": 1.0,
        "candidates": {"delta/2": {"atoms": [[0, 0.5]]}},
        "stages": [
            {"kind": "model-product", "name": "H-delta", "u": {"density_panels": [{"lo": 0, "density": "1"}]},
             "v": {"atoms": [[0, 1]]}, "expect": "delta/2", "tol": 1e-4},
            {"kind": "model-product", "name": "delta-delta", "u": {"atoms": [[0, 1]]},
             "v": {"atoms": [[0, 1]]}, "expect": "not-exists", "min_slope": 0.9},
        ],
    },
]

BUILTIN_IDS = tuple(s["id"] for s in BUILTIN)


def builtin(scenario_id):
    for data in BUILTIN:
        if data["id"] == scenario_id:
            return parse_scenario(data, source="builtin")
    raise ParseError(f"no builtin scenario {scenario_id!r}")


def list_scenarios():
    """``(id, description)`` rows of the builtin registry."""
    return [(s["id"], s["description"]) for s in BUILTIN]


def resolve(ref):
    """A builtin id or a path to a scenario JSON file."""
    if ref in BUILTIN_IDS:
        return builtin(ref)
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise ParseError(f"scenario file {ref!r} not found")
        return load_scenario(path)
    raise ParseError(f"{ref!r} is neither a builtin id nor a scenario file")
