"""Small arithmetic expressions in the adapted coordinates ``u, v, x1..xn``.

Grammar: numbers, those identifiers, ``+ - * / ^``, ``sin``, ``cos``,
``exp`` and parentheses. Strings are tokenized against a whitelist before
sympy sees them, so arbitrary Python never reaches ``parse_expr``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    auto_number,
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import InputError

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")
_FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp}


def coordinate_names(n: int) -> tuple[str, ...]:
    return ("u", "v") + tuple(f"x{i + 1}" for i in range(n))


def _check_tokens(text: str, allowed: set[str]) -> None:
    pos = 0
    text = text.rstrip()
    if not text:
        raise InputError("empty expression")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise InputError(f"unexpected character {text[pos]!r} in {text!r}")
        name = m.group(2)
        if name is not None and name not in allowed and name not in _FUNCTIONS:
            raise InputError(f"unknown identifier {name!r} in {text!r}")
        pos = m.end()


@dataclass(frozen=True, eq=False)
class CompiledExpr:
    """Scalar function of a point together with its gradient."""

    text: str
    expr: sympy.Expr
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]

    def depends_on(self, name: str) -> bool:
        return sympy.Symbol(name) in self.expr.free_symbols


def compile_expr(text: str, n: int) -> CompiledExpr:
    """Parse ``text`` over ``(u, v, x1..xn)`` and build value/gradient callables."""
    names = coordinate_names(n)
    _check_tokens(text, set(names))
    symbols = sympy.symbols(names)
    local = dict(zip(names, symbols)) | _FUNCTIONS
    try:
        expr = parse_expr(
            text,
            local_dict=local,
            global_dict={"Integer": sympy.Integer, "Float": sympy.Float, "Rational": sympy.Rational},
            transformations=standard_transformations + (convert_xor, auto_number),
        )
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as exc:
        raise InputError(f"cannot parse {text!r}: {exc}") from None
    if not isinstance(expr, sympy.Expr) or (expr.free_symbols - set(symbols)):
        raise InputError(f"{text!r} is not a scalar expression in {names}")
    f = sympy.lambdify(symbols, expr, "math")
    grads = [sympy.lambdify(symbols, sympy.diff(expr, s), "math") for s in symbols]

    def value(p) -> float:
        return float(f(*p))

    def gradient(p) -> np.ndarray:
        return np.array([float(d(*p)) for d in grads])

    return CompiledExpr(text, expr, value, gradient)


def kundt_from_expressions(
    n: int,
    H: str,
    W: list[str] | None = None,
    h: list[str] | None = None,
):
    """Adapted metric whose H, W_i and h_ij (row-major, n*n strings) are expressions.

    Omitted W defaults to zero and omitted h to the identity.
    """
    from .chart import kundt

    if n < 1:
        raise InputError("the transverse dimension must be at least 1")
    dim = n + 2
    Hc = compile_expr(H, n)
    Wc = [compile_expr(w, n) for w in (W or ["0"] * n)]
    if len(Wc) != n:
        raise InputError(f"expected {n} W expressions, got {len(Wc)}")
    kwargs = {}
    if h is not None:
        if len(h) != n * n:
            raise InputError(f"expected {n * n} h expressions, got {len(h)}")
        hc = [compile_expr(e, n) for e in h]
        for i in range(n):
            for j in range(i):
                if sympy.simplify(hc[i * n + j].expr - hc[j * n + i].expr) != 0:
                    raise InputError("h must be symmetric")

        def h_val(p):
            return np.array([c.value(p) for c in hc]).reshape(n, n)

        def h_grad(p):
            return np.stack([c.gradient(p) for c in hc], axis=1).reshape(dim, n, n)

        kwargs = {"h": h_val, "dh": h_grad}
    return kundt(
        n, Hc.value, Hc.gradient,
        W=[w.value for w in Wc], dW=[w.gradient for w in Wc],
        name="kundt", **kwargs,
    )
