"""Pseudo-Riemannian metrics in a single coordinate chart.

Every metric carries its first derivatives as closures (``dg[k, i, j]`` is
``d_k g_ij``); the geodesic loop never differentiates numerically. Derivatives
are checked against central differences when a metric is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, InvariantViolation

Point = np.ndarray

FD_STEP = 1e-5
FD_REL_TOL = 1e-6
FD_SAMPLES = 20
VALIDATION_SEED = 20240101
SINGULAR_COND = 1e14


def _gaussian_sampler(dim: int, scale: float = 1.0):
    def sample(rng: np.random.Generator) -> Point:
        return scale * rng.standard_normal(dim)

    return sample


def _fd_check(value, derivative, points: Sequence[Point], what: str) -> float:
    """Largest relative mismatch between ``derivative`` and central differences of ``value``.

    ``derivative(p)`` must put the differentiation index first.
    """
    worst = 0.0
    for p in points:
        analytic = np.asarray(derivative(p), dtype=float)
        for k in range(len(p)):
            dp = np.zeros_like(p)
            dp[k] = FD_STEP
            fd = (np.asarray(value(p + dp)) - np.asarray(value(p - dp))) / (2 * FD_STEP)
            scale = max(1.0, float(np.max(np.abs(analytic))))
            worst = max(worst, float(np.max(np.abs(fd - analytic[k]))) / scale)
    if worst > FD_REL_TOL:
        raise InvariantViolation(f"{what} disagrees with finite differences (rel. error {worst:.2e})")
    return worst


def _sample_domain(sampler, domain, n: int, rng: np.random.Generator) -> list[Point]:
    points = []
    for _ in range(200 * n):
        p = np.asarray(sampler(rng), dtype=float)
        if domain(p):
            points.append(p)
            if len(points) == n:
                return points
    raise InputError("could not sample points inside the metric's domain")


def _everywhere(p) -> bool:
    return True


@dataclass(frozen=True, eq=False)
class ChartMetric:
    """Metric ``g(p)`` with analytic derivative ``dg(p)[k, i, j] = d_k g_ij``.

    ``sampler`` draws random points (used for derivative validation and by
    property tests); points it returns outside ``domain`` are discarded.
    Singular forms inside the domain are only reported when evaluated.
    """

    dim: int
    g: Callable[[Point], np.ndarray]
    dg: Callable[[Point], np.ndarray]
    domain: Callable[[Point], bool] = _everywhere
    name: str = ""
    coords: tuple[str, ...] = ()
    sampler: Callable[[np.random.Generator], Point] | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("dim must be positive")
        if self.coords and len(self.coords) != self.dim:
            raise InputError("coordinate labels do not match dimension")
        if self.sampler is None:
            object.__setattr__(self, "sampler", _gaussian_sampler(self.dim))
        if self.validate:
            self.check_derivatives()

    def check_derivatives(self, samples: int = FD_SAMPLES, seed: int = VALIDATION_SEED) -> float:
        rng = np.random.default_rng(seed)
        points = _sample_domain(self.sampler, self.domain, samples, rng)
        for p in points:
            gp = np.asarray(self.g(p), dtype=float)
            if gp.shape != (self.dim, self.dim) or not np.allclose(gp, gp.T, rtol=0, atol=1e-14):
                raise InvariantViolation(f"metric {self.name!r} is not a symmetric {self.dim}x{self.dim} matrix")
        return _fd_check(self.g, self.dg, points, f"dg of metric {self.name!r}")

    def sample_points(self, n: int, rng: np.random.Generator) -> list[Point]:
        return _sample_domain(self.sampler, self.domain, n, rng)

    def index(self, label: str) -> int:
        return self.coords.index(label)


@dataclass(frozen=True)
class ChartState:
    position: np.ndarray
    velocity: np.ndarray

    @classmethod
    def from_array(cls, y) -> "ChartState":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n], y[n:])

    def to_array(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.position, float), np.asarray(self.velocity, float)])


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    """Vector field with its Jacobian ``derivative(p)[i, j] = d_j V^i``."""

    value: Callable[[Point], np.ndarray]
    derivative: Callable[[Point], np.ndarray]
    dim: int
    name: str = ""
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.validate:
            rng = np.random.default_rng(VALIDATION_SEED)
            points = [rng.standard_normal(self.dim) for _ in range(FD_SAMPLES)]
            # _fd_check wants the differentiation index first
            _fd_check(self.value, lambda p: np.asarray(self.derivative(p)).T, points, f"vector field {self.name!r}")


def _metric_at(metric: ChartMetric, p) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    if p.shape != (metric.dim,):
        raise InputError(f"point must have length {metric.dim}")
    if not metric.domain(p):
        raise InputError(f"point {p} is outside the domain of {metric.name!r}")
    return p, np.asarray(metric.g(p), dtype=float)


def _lower_christoffel(dg: np.ndarray) -> np.ndarray:
    # G[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    return 0.5 * (np.transpose(dg, (2, 0, 1)) + np.transpose(dg, (2, 1, 0)) - dg)


def _solve_metric(g: np.ndarray, rhs: np.ndarray, name: str) -> np.ndarray:
    try:
        if np.linalg.cond(g) > SINGULAR_COND:
            raise np.linalg.LinAlgError
        return np.linalg.solve(g, rhs)
    except np.linalg.LinAlgError:
        raise InvariantViolation(f"metric {name!r} is singular at this point") from None


def christoffel(metric: ChartMetric, p) -> np.ndarray:
    """Levi-Civita symbols ``Gamma[k, i, j]``, symmetric in ``(i, j)``."""
    p, g = _metric_at(metric, p)
    lower = _lower_christoffel(np.asarray(metric.dg(p), dtype=float))
    n = metric.dim
    return _solve_metric(g, lower.reshape(n, n * n), metric.name).reshape(n, n, n)


def geodesic_rhs(metric: ChartMetric, s: ChartState) -> tuple[np.ndarray, np.ndarray]:
    """(velocity, acceleration) with acceleration^k = -Gamma^k_ij v^i v^j."""
    v = np.asarray(s.velocity, dtype=float)
    gamma = christoffel(metric, s.position)
    return v, -np.einsum("kij,i,j->k", gamma, v, v)


def geodesic_field(metric: ChartMetric):
    """First-order geodesic system on ``(position, velocity)`` for the integrator.

    Solves ``g a = -G[., v, v]`` directly instead of forming all symbols.
    """
    n = metric.dim
    g_of, dg_of, name = metric.g, metric.dg, metric.name

    def field(y):
        x, v = y[:n], y[n:]
        dg = np.asarray(dg_of(x), dtype=float)
        # G[l, v, v] = d_v g(v, .)_l - 1/2 d_l g(v, v)
        dgv = np.einsum("kij,k,i->j", dg, v, v)
        dgvv = np.einsum("lij,i,j->l", dg, v, v)
        g = np.asarray(g_of(x), dtype=float)
        try:
            acc = -np.linalg.solve(g, dgv - 0.5 * dgvv)
        except np.linalg.LinAlgError:
            raise InvariantViolation(f"metric {name!r} is singular at {x}") from None
        return np.concatenate([v, acc])

    return field


def geodesic_domain(metric: ChartMetric):
    n = metric.dim
    return lambda y: bool(metric.domain(y[:n]))


def killing_residual(metric: ChartMetric, V: VectorFieldSpec, p) -> np.ndarray:
    """Lie derivative ``(L_V g)_ij = V^k d_k g_ij + g_kj d_i V^k + g_ik d_j V^k``."""
    p, g = _metric_at(metric, p)
    dg = np.asarray(metric.dg(p), dtype=float)
    vec = np.asarray(V.value(p), dtype=float)
    jac = np.asarray(V.derivative(p), dtype=float)
    return np.einsum("k,kij->ij", vec, dg) + jac.T @ g + g @ jac


def clairaut(metric: ChartMetric, V: VectorFieldSpec, s: ChartState) -> float:
    """g(velocity, V) at the state's position."""
    p, g = _metric_at(metric, s.position)
    return float(np.asarray(s.velocity, dtype=float) @ g @ np.asarray(V.value(p), dtype=float))


def energy(metric: ChartMetric, s: ChartState) -> float:
    """g(velocity, velocity)."""
    _, g = _metric_at(metric, s.position)
    v = np.asarray(s.velocity, dtype=float)
    return float(v @ g @ v)


def clairaut_monitor(metric: ChartMetric, V: VectorFieldSpec):
    n = metric.dim
    return lambda y: float(y[n:] @ np.asarray(metric.g(y[:n])) @ np.asarray(V.value(y[:n])))


def energy_monitor(metric: ChartMetric):
    n = metric.dim
    return lambda y: float(y[n:] @ np.asarray(metric.g(y[:n])) @ y[n:])


# -- vector fields -------------------------------------------------------------

def coordinate_field(dim: int, index: int, name: str = "") -> VectorFieldSpec:
    e = np.zeros(dim)
    e[index] = 1.0
    zero = np.zeros((dim, dim))
    return VectorFieldSpec(lambda p: e, lambda p: zero, dim, name=name or f"d{index}", validate=False)


def linear_field(matrix, name: str = "") -> VectorFieldSpec:
    """V(p) = A p, e.g. a boost ``y d_x + x d_y``."""
    a = np.array(matrix, dtype=float)
    return VectorFieldSpec(lambda p: a @ p, lambda p: a, a.shape[0], name=name)


# -- built-in metrics ------------------------------------------------------------

def flat3() -> ChartMetric:
    """2 du dv + dx^2 in coordinates (u, v, x)."""
    g0 = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    zero = np.zeros((3, 3, 3))
    return ChartMetric(3, lambda p: g0, lambda p: zero, name="flat3", coords=("u", "v", "x"))


def clifton_pohl() -> ChartMetric:
    """2 dx dy / (x^2 + y^2) on the punctured plane.

    This is the universal-cover picture; the homothety (x, y) ~ 2(x, y) that
    makes the torus is not applied (completeness is decided upstairs).
    """

    def g(p):
        w = 1.0 / (p[0] * p[0] + p[1] * p[1])
        return np.array([[0.0, w], [w, 0.0]])

    def dg(p):
        r2 = p[0] * p[0] + p[1] * p[1]
        out = np.zeros((2, 2, 2))
        for k in range(2):
            d = -2.0 * p[k] / (r2 * r2)
            out[k, 0, 1] = out[k, 1, 0] = d
        return out

    return ChartMetric(
        2, g, dg,
        domain=lambda p: p[0] * p[0] + p[1] * p[1] > 1e-16,
        name="clifton-pohl", coords=("x", "y"),
    )


def pp_wave_cos() -> ChartMetric:
    """du dv + cos(t) du^2 + dt^2 in coordinates (u, v, t)."""

    def g(p):
        return np.array([[math.cos(p[2]), 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 1.0]])

    def dg(p):
        out = np.zeros((3, 3, 3))
        out[2, 0, 0] = -math.sin(p[2])
        return out

    return ChartMetric(3, g, dg, name="pp-wave-cos", coords=("u", "v", "t"))


def warped_sol(f=None, df=None) -> ChartMetric:
    """f(z)(dx^2 - dy^2) + dz^2 in coordinates (x, y, z); default f = 2 + sin z."""
    if f is None:
        f, df = (lambda z: 2.0 + math.sin(z)), math.cos
    elif df is None:
        raise InputError("warped_sol needs the derivative of f")

    def g(p):
        fz = f(p[2])
        return np.diag([fz, -fz, 1.0])

    def dg(p):
        out = np.zeros((3, 3, 3))
        d = df(p[2])
        out[2, 0, 0], out[2, 1, 1] = d, -d
        return out

    return ChartMetric(3, g, dg, name="warped-sol", coords=("x", "y", "z"))


def hopf_halfspace() -> ChartMetric:
    """Flat 2 du dv + dx^2 restricted to v > 0, coordinates (v, x, u)."""
    g0 = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    zero = np.zeros((3, 3, 3))

    def sample(rng):
        p = rng.standard_normal(3)
        p[0] = abs(p[0]) + 0.1
        return p

    return ChartMetric(
        3, lambda p: g0, lambda p: zero,
        domain=lambda p: p[0] > 0.0,
        name="hopf-halfspace", coords=("v", "x", "u"), sampler=sample,
    )


def kundt(
    n: int,
    H: Callable,
    dH: Callable,
    W: Sequence[Callable] = (),
    dW: Sequence[Callable] = (),
    h: Callable | None = None,
    dh: Callable | None = None,
    name: str = "kundt",
    domain: Callable[[Point], bool] = _everywhere,
) -> ChartMetric:
    """Adapted metric 2 du dv + H du^2 + sum W_i du dx^i + sum h_ij dx^i dx^j.

    Coordinates are ``(u, v, x1, ..., xn)``. ``H`` and each ``W_i`` take the
    full point; ``dH``/``dW_i`` return their gradients. ``h`` returns the
    symmetric n x n block and ``dh`` its derivatives stacked as
    ``(n + 2, n, n)``. Leafwise geodesics (u = const) only decouple from v
    when ``h`` does not depend on v; this is not enforced.
    """
    dim = n + 2
    W = tuple(W) or tuple((lambda p: 0.0) for _ in range(n))
    dW = tuple(dW) or tuple((lambda p: np.zeros(dim)) for _ in range(n))
    if len(W) != n or len(dW) != n:
        raise InputError(f"expected {n} W components and gradients")
    if h is None:
        eye, zero = np.eye(n), np.zeros((dim, n, n))
        h, dh = (lambda p: eye), (lambda p: zero)
    elif dh is None:
        raise InputError("kundt needs dh together with h")

    def g(p):
        out = np.zeros((dim, dim))
        out[0, 1] = out[1, 0] = 1.0
        out[0, 0] = H(p)
        for i in range(n):
            out[0, 2 + i] = out[2 + i, 0] = 0.5 * W[i](p)
        out[2:, 2:] = h(p)
        return out

    def dg(p):
        out = np.zeros((dim, dim, dim))
        out[:, 0, 0] = dH(p)
        for i in range(n):
            d = 0.5 * np.asarray(dW[i](p), dtype=float)
            out[:, 0, 2 + i] = d
            out[:, 2 + i, 0] = d
        out[:, 2:, 2:] = dh(p)
        return out

    coords = ("u", "v") + tuple(f"x{i + 1}" for i in range(n))
    return ChartMetric(dim, g, dg, domain=domain, name=name, coords=coords)


BUILTIN_METRICS: dict[str, Callable[[], ChartMetric]] = {
    "flat3": flat3,
    "clifton-pohl": clifton_pohl,
    "pp-wave-cos": pp_wave_cos,
    "warped-sol": warped_sol,
    "hopf-halfspace": hopf_halfspace,
}


def builtin_metric(name: str) -> ChartMetric:
    try:
        return BUILTIN_METRICS[name]()
    except KeyError:
        raise InputError(
            f"unknown metric {name!r}; choose from {sorted(BUILTIN_METRICS) + ['kundt']}"
        ) from None


def killing_fields(metric_name: str) -> dict[str, VectorFieldSpec]:
    """Known Killing fields of a built-in metric, keyed by a readable name."""
    if metric_name == "pp-wave-cos":
        return {"d_u": coordinate_field(3, 0, "d_u"), "d_v": coordinate_field(3, 1, "d_v")}
    if metric_name == "warped-sol":
        boost = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        return {
            "d_x": coordinate_field(3, 0, "d_x"),
            "d_y": coordinate_field(3, 1, "d_y"),
            "y d_x + x d_y": linear_field(boost, "y d_x + x d_y"),
        }
    if metric_name in ("flat3", "hopf-halfspace"):
        return {f"d_{c}": coordinate_field(3, i, f"d_{c}") for i, c in enumerate(builtin_metric(metric_name).coords)}
    return {}
