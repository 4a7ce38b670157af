"""Lorentzian 3-manifolds with a null frame ``(V, X, Y)`` invariant under V.

The only nonzero pairings are ``g(V, Y) = g(X, X) = 1``; the bracket is
``[X, Y] = f Y + h X + mu V`` with V central. Geodesics are written as
``a V + b X + alpha Y`` where ``alpha`` (the pairing with V) is constant, so
the flow reduces to the base point ``(x, y)`` and the coefficients ``(a, b)``.
Integrator state layout throughout: ``(x, y, a, b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chart import FD_STEP, _fd_check
from .errors import InputError, InvariantViolation

V, X, Y = 0, 1, 2
LABELS = ("V", "X", "Y")
PAIRING = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
TWO_PI = 2.0 * math.pi
PERIOD_TOL = 1e-12
BRACKET_TOL = 1e-8
VALIDATION_SEED = 7

Scalar2 = Callable[[float, float], float]
Vector2 = Callable[[float, float], np.ndarray]


def _reeb_x(x, y):
    return np.array([math.cos(x), -math.sin(x)])


def _reeb_y(x, y):
    return np.array([math.sin(x), math.cos(x)])


def _fd_bracket(A: Vector2, B: Vector2, x: float, y: float, step: float = FD_STEP) -> np.ndarray:
    """[A, B] = DB.A - DA.B with central-difference Jacobians."""

    def jac(F):
        cols = [
            (F(x + step, y) - F(x - step, y)) / (2 * step),
            (F(x, y + step) - F(x, y - step)) / (2 * step),
        ]
        return np.column_stack(cols)

    return jac(B) @ A(x, y) - jac(A) @ B(x, y)


@dataclass(frozen=True, eq=False)
class FrameStructure:
    """Structure functions ``f, h, mu`` on the plane, 2pi-periodic in x and y.

    ``x_star``/``y_star`` are the projections of X and Y to the base and must
    satisfy ``[X*, Y*] = f Y* + h X*``; ``partials`` (optional) maps each of
    ``"f"``, ``"h"``, ``"mu"`` to its gradient and is only used for validation.
    """

    f: Scalar2
    h: Scalar2
    mu: Scalar2
    x_star: Vector2 = _reeb_x
    y_star: Vector2 = _reeb_y
    partials: dict | None = None
    name: str = ""
    validate: bool = True

    def __post_init__(self):
        if self.validate:
            self.check()

    def check(self, samples: int = 20, seed: int = VALIDATION_SEED) -> dict:
        rng = np.random.default_rng(seed)
        points = rng.uniform(-math.pi, math.pi, size=(samples, 2))
        period = bracket = 0.0
        for x, y in points:
            for fn in (self.f, self.h, self.mu):
                base = fn(x, y)
                period = max(period, abs(fn(x + TWO_PI, y) - base), abs(fn(x, y + TWO_PI) - base))
            lhs = _fd_bracket(self.x_star, self.y_star, x, y)
            rhs = self.f(x, y) * self.y_star(x, y) + self.h(x, y) * self.x_star(x, y)
            bracket = max(bracket, float(np.max(np.abs(lhs - rhs))))
        if period > PERIOD_TOL:
            raise InvariantViolation(f"structure functions are not 2pi-periodic (error {period:.2e})")
        if bracket > BRACKET_TOL:
            raise InvariantViolation(f"[X*, Y*] != f Y* + h X* (error {bracket:.2e})")
        if self.partials:
            for key, grad in self.partials.items():
                fn = getattr(self, key)
                _fd_check(lambda p: fn(p[0], p[1]), lambda p: grad(p[0], p[1]), list(points), f"partials of {key}")
        return {"periodicity": period, "bracket": bracket}

    def values(self, x: float, y: float) -> tuple[float, float, float]:
        return self.f(x, y), self.h(x, y), self.mu(x, y)


def reeb_structure() -> FrameStructure:
    """f = sin x, h = cos x, mu = 0 with X* = (cos x, -sin x), Y* = (sin x, cos x)."""
    return FrameStructure(
        f=lambda x, y: math.sin(x),
        h=lambda x, y: math.cos(x),
        mu=lambda x, y: 0.0,
        partials={
            "f": lambda x, y: np.array([math.cos(x), 0.0]),
            "h": lambda x, y: np.array([-math.sin(x), 0.0]),
            "mu": lambda x, y: np.zeros(2),
        },
        name="reeb",
    )


def constant_structure(f: float, h: float, mu: float) -> FrameStructure:
    """Constant structure functions over Reeb base fields.

    The base bracket constraint only holds for the Reeb values, so this is
    meant for exercising the reduced ODE in isolation.
    """
    return FrameStructure(
        f=lambda x, y: f, h=lambda x, y: h, mu=lambda x, y: mu,
        name=f"constant({f}, {h}, {mu})", validate=False,
    )


BUILTIN_STRUCTURES = {"reeb": reeb_structure}


def builtin_structure(name: str) -> FrameStructure:
    try:
        return BUILTIN_STRUCTURES[name]()
    except KeyError:
        raise InputError(f"unknown frame structure {name!r}; choose from {sorted(BUILTIN_STRUCTURES)}") from None


@dataclass(frozen=True)
class ReducedState:
    x: float
    y: float
    a: float
    b: float
    alpha: float
    beta: float

    @classmethod
    def null(cls, x: float, y: float, b: float, alpha: float = 1.0, beta: float = 0.0) -> "ReducedState":
        """State whose ``a`` is fixed by the constraint ``2 a alpha + b^2 = beta``."""
        if alpha == 0:
            raise InputError("alpha must be nonzero to solve the constraint for a")
        return cls(x, y, (beta - b * b) / (2.0 * alpha), b, alpha, beta)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.a, self.b], dtype=float)

    def constraint(self) -> float:
        return 2.0 * self.a * self.alpha + self.b * self.b - self.beta


@dataclass(frozen=True)
class ConnectionTable:
    """``coeffs[A, B]`` holds the frame components of ``nabla_A e_B``."""

    coeffs: np.ndarray

    def __getitem__(self, key: tuple[str, str]) -> np.ndarray:
        a, b = key
        return self.coeffs[LABELS.index(a), LABELS.index(b)]

    def pairing(self, A: int, B: int, C: int) -> float:
        """g(nabla_A e_B, e_C)."""
        return float(self.coeffs[A, B] @ PAIRING[:, C])


def frame_bracket(f: float, h: float, mu: float) -> np.ndarray:
    """``br[A, B]`` = frame components of ``[e_A, e_B]``."""
    br = np.zeros((3, 3, 3))
    br[X, Y] = [mu, h, f]
    br[Y, X] = -br[X, Y]
    return br


def connection_table(fr: FrameStructure, p) -> ConnectionTable:
    f, h, mu = fr.values(float(p[0]), float(p[1]))
    c = np.zeros((3, 3, 3))
    c[X, V] = c[V, X] = [-0.5 * f, 0.0, 0.0]
    c[Y, V] = c[V, Y] = [0.0, 0.5 * f, 0.0]
    c[X, X] = [-h, 0.0, 0.0]
    c[X, Y] = [0.0, h, 0.5 * f]
    c[Y, X] = [-mu, 0.0, -0.5 * f]
    c[Y, Y] = [0.0, mu, 0.0]
    return ConnectionTable(c)


def frame_consistency_residuals(fr: FrameStructure, p, table: ConnectionTable | None = None) -> dict:
    """Largest torsion and metric-compatibility defects of a connection table."""
    table = table or connection_table(fr, p)
    c = table.coeffs
    br = frame_bracket(*fr.values(float(p[0]), float(p[1])))
    torsion = np.max(np.abs(c - np.transpose(c, (1, 0, 2)) - br))
    # pairings are constant, so compatibility reads g(nabla_A B, C) + g(B, nabla_A C) = 0
    lowered = np.einsum("abk,kc->abc", c, PAIRING)
    compat = np.max(np.abs(lowered + np.transpose(lowered, (0, 2, 1))))
    return {"torsion": float(torsion), "metric_compat": float(compat)}


def covariant_acceleration_terms(fr: FrameStructure, s: ReducedState) -> np.ndarray:
    """Frame components of sum_{A,B} gdot^A gdot^B nabla_A e_B for gdot = (a, b, alpha)."""
    w = np.array([s.a, s.b, s.alpha])
    return np.einsum("a,b,abk->k", w, w, connection_table(fr, (s.x, s.y)).coeffs)


def reduced_rhs(fr: FrameStructure, s: ReducedState) -> np.ndarray:
    """(xdot, ydot, adot, bdot) of the reduced geodesic system."""
    if s.alpha == 0:
        raise InputError("alpha = 0 geodesics stay in a leaf; integrate them with the chart engine")
    return _rhs(fr, s.alpha, s.beta, s.x, s.y, s.b)


def _rhs(fr, alpha, beta, x, y, b):
    f, h, mu = fr.values(x, y)
    bdot = 0.5 * f * b * b - alpha * h * b - (0.5 * beta * f + alpha * alpha * mu)
    adot = -f / (2.0 * alpha) * b ** 3 + h * b * b + (mu * alpha + beta * f / (2.0 * alpha)) * b
    base = b * np.asarray(fr.x_star(x, y)) + alpha * np.asarray(fr.y_star(x, y))
    return np.array([base[0], base[1], adot, bdot])


def reduced_field(fr: FrameStructure, alpha: float, beta: float):
    if alpha == 0:
        raise InputError("alpha = 0 geodesics stay in a leaf; integrate them with the chart engine")
    return lambda s: _rhs(fr, alpha, beta, s[0], s[1], s[3])


def constraint_monitor(alpha: float, beta: float):
    return lambda s: 2.0 * s[2] * alpha + s[3] * s[3] - beta


@dataclass(frozen=True)
class BandReport:
    crossed_band: bool
    turnaround: bool
    x_range: tuple[float, float]
    b_monotone_increasing: bool
    leaf_events: dict

    def to_dict(self) -> dict:
        return {
            "crossed_band": self.crossed_band,
            "turnaround": self.turnaround,
            "x_range": list(self.x_range),
            "b_monotone_increasing": self.b_monotone_increasing,
            "leaf_events": {str(k): v for k, v in self.leaf_events.items()},
        }


def _leaf_events(xs: np.ndarray, level: float, tol: float) -> int:
    # a leaf counts as reached when x starts on it or passes strictly through it;
    # asymptotic approach (x creeping onto the leaf in float precision) does not count
    d = xs - level
    signs = np.where(d > tol, 1, np.where(d < -tol, -1, 0))
    events = int(signs[0] == 0)
    nonzero = signs[signs != 0]
    events += int(np.count_nonzero(nonzero[1:] != nonzero[:-1]))
    return events


def band_report(traj, tol: float = 1e-8) -> BandReport:
    """Band diagnostics of a reduced trajectory in the lifted x coordinate.

    Boundary leaves sit at ``x = k pi/2``.
    """
    states = np.asarray(traj.states)
    xs, bs = states[:, 0], states[:, 3]
    quarter = 0.5 * math.pi
    ks = range(math.floor(xs.min() / quarter) - 1, math.ceil(xs.max() / quarter) + 2)
    events = {k: n for k in ks if (n := _leaf_events(xs, k * quarter, tol))}
    return BandReport(
        crossed_band=len(events) >= 2,
        turnaround=any(n >= 2 for n in events.values()),
        x_range=(float(xs.min()), float(xs.max())),
        b_monotone_increasing=bool(np.all(np.diff(bs) > 0)),
        leaf_events=events,
    )
