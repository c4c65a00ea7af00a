"""Small, safe expression language over ``t`` and ``x``.

Expressions are parsed once with :mod:`ast`, checked against a whitelist
and evaluated with numpy broadcasting.  Named parameters (``c1``,
``alpha`` ...) are bound at construction.
"""

from __future__ import annotations

import ast
import functools
import math

import numpy as np

from .errors import ParseError


def _heaviside(z):
    # H(0) = 1/2, the value every symmetric mollifier produces at a jump
    return np.heaviside(z, 0.5)


def _pos(z):
    return np.maximum(z, 0.0)


def _neg(z):
    return np.maximum(-z, 0.0)


def _pow(base, expo):
    # exact power of the positive part keeps z**alpha clean near 0
    base = np.asarray(base, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.power(base, expo)


def _bump(z):
    from .profiles import EXP_BUMP

    return EXP_BUMP(z)


def _bumpcdf(z):
    from .profiles import EXP_BUMP

    return EXP_BUMP.cdf(z)


FUNCTIONS = {
    "H": _heaviside,
    "sign": np.sign,
    "pos": _pos,
    "neg": _neg,
    "exp": np.exp,
    "log": np.log,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "sin": np.sin,
    "cos": np.cos,
    "pow": _pow,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "min": np.minimum,
    "max": np.maximum,
    "bump": _bump,
    "bumpcdf": _bumpcdf,
}

CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("t", "x")

_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
    ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub,
    ast.UAdd,
)


class _Substitute(ast.NodeTransformer):
    def __init__(self, replacements):
        self.replacements = replacements

    def visit_Name(self, node):
        if node.id in self.replacements:
            return self.replacements[node.id]
        return node


@functools.lru_cache(maxsize=4096)
def _analyse(text):
    """Whitelist check; returns the free names (call targets excluded)."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None
    names = set()
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ParseError(f"disallowed syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ParseError(f"unknown function in {text!r}")
            if node.keywords:
                raise ParseError(f"keyword arguments not allowed in {text!r}")
        elif isinstance(node, ast.Name):
            names.add(node.id)
        elif isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ParseError(f"non-numeric literal in {text!r}")
    called = {n.func.id for n in ast.walk(tree) if isinstance(n, ast.Call)}
    return frozenset(names - called)


@functools.lru_cache(maxsize=4096)
def _compiled(text):
    return compile(ast.parse(text, mode="eval"), "<expr>", "eval")


class Expr:
    """A parsed scalar expression in ``(t, x)``.

    >>> Expr("c*H(-x)", {"c": 2})(0.0, -1.0)
    2.0
    """

    def __init__(self, text, params=None):
        if isinstance(text, Expr):
            params = {**text.params, **(params or {})}
            text = text.text
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            text = repr(float(text))
        if not isinstance(text, str) or not text.strip():
            raise ParseError(f"expression must be a non-empty string, got {text!r}")
        self.text = text.strip()
        self.params = {k: float(v) for k, v in (params or {}).items()}
        free = _analyse(self.text)
        unknown = free - set(VARIABLES) - set(self.params) - set(CONSTANTS)
        if unknown:
            raise ParseError(f"unknown names {sorted(unknown)} in {self.text!r}")
        self.variables = frozenset(free & set(VARIABLES))
        self._code = _compiled(self.text)
        self._ns = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS, **self.params}

    # -- evaluation ---------------------------------------------------------
    def __call__(self, t=0.0, x=0.0):
        scalar = np.ndim(t) == 0 and np.ndim(x) == 0
        ns = dict(self._ns)
        ns["t"] = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        ns["x"] = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        with np.errstate(all="ignore"):
            val = eval(self._code, ns)  # noqa: S307 - whitelisted tree
        if scalar:
            return float(val)
        shape = np.broadcast_shapes(np.shape(t), np.shape(x))
        return np.array(np.broadcast_to(np.asarray(val, dtype=float), shape))

    @property
    def depends_on_t(self):
        return "t" in self.variables

    @property
    def depends_on_x(self):
        return "x" in self.variables

    @property
    def is_constant(self):
        return not self.variables

    def constant_value(self):
        if not self.is_constant:
            raise ValueError(f"{self.text!r} is not constant")
        return self(0.0, 0.0)

    # -- symbolic helpers ---------------------------------------------------
    def substitute(self, **replacements):
        """Return a new expression with variables replaced by sub-expressions.

        Values may be numbers, strings or :class:`Expr` instances; parameters
        of sub-expressions are merged.
        """
        params = dict(self.params)
        nodes = {}
        for name, value in replacements.items():
            if isinstance(value, Expr):
                params.update(value.params)
                value = value.text
            elif not isinstance(value, str):
                value = repr(float(value))
            nodes[name] = ast.parse(f"({value})", mode="eval").body
        tree = _Substitute(nodes).visit(ast.parse(self.text, mode="eval"))
        return Expr(ast.unparse(ast.fix_missing_locations(tree)), params)

    def affine_pullback(self, slope, offset):
        """Expression of ``x -> self((x - offset)/slope) / slope``.

        This is the density of the image measure under ``x -> slope*x + offset``.
        """
        if self.is_constant:
            return Expr(repr(self.constant_value() / float(slope)))
        inner = f"(x - {float(offset)!r}) / {float(slope)!r}"
        moved = self.substitute(x=inner)
        return Expr(f"({moved.text}) / {float(slope)!r}", moved.params)

    def at_time(self, t):
        """Freeze ``t`` to a number."""
        if not self.depends_on_t:
            return self
        return self.substitute(t=float(t))

    def scaled(self, factor):
        if self.is_constant:
            return Expr(repr(float(factor) * self.constant_value()))
        return Expr(f"({float(factor)!r}) * ({self.text})", self.params)

    def times(self, other):
        other = other if isinstance(other, Expr) else Expr(other)
        return Expr(f"({self.text}) * ({other.text})", {**self.params, **other.params})

    def __repr__(self):
        return f"Expr({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and other.text == self.text and other.params == self.params

    def __hash__(self):
        return hash((self.text, tuple(sorted(self.params.items()))))


def as_expr(value, params=None):
    """Coerce numbers, strings and expressions to :class:`Expr`."""
    if isinstance(value, Expr) and not params:
        return value
    return Expr(value, params)
