"""Adaptive integration of autonomous systems with blow-up certification.

The stepper is the Dormand-Prince 8(5,3) embedded pair from SciPy, driven one
accepted step at a time so that every step can be inspected for

* conserved-quantity monitors (evaluated at every accepted step),
* domain exit (located by bisection on the step's dense-output interpolant),
* finite-time blow-up: the norm is past ``blowup_norm`` *and* either the
  accepted step fell below ``h_min`` or the norm doubled within one step.

Exponential growth that stays below the escape radius, or grows past it with
steps of ordinary size, runs to ``t_max`` and is reported as ``Completed``.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field, fields
from typing import Callable, Mapping

import numpy as np
from scipy.integrate import DOP853

from .errors import InputError, StateError

Field = Callable[[np.ndarray], np.ndarray]
Monitor = Callable[[np.ndarray], float]

DOMAIN_BISECTION_TOL = 1e-10
ESCAPE_FIT_SAMPLES = 8


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    h_min: float = 1e-14
    h_max: float = math.inf
    blowup_norm: float = 1e8
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InputError("rel_tol and abs_tol must be positive")
        if not (0 < self.h_min <= self.h_max):
            raise InputError("need 0 < h_min <= h_max")
        if not self.blowup_norm > 1:
            raise InputError("blowup_norm must exceed 1")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise InputError("max_steps must be a positive integer")

    def replace(self, **changes) -> "IntegratorConfig":
        known = {f.name for f in fields(self)}
        unknown = set(changes) - known
        if unknown:
            raise InputError(f"unknown integrator settings: {sorted(unknown)}")
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return IntegratorConfig(**values)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# -- termination verdicts ------------------------------------------------------

@dataclass(frozen=True)
class Completed:
    t_final: float
    kind = "Completed"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t_final}


@dataclass(frozen=True)
class BlowUp:
    t_escape_low: float
    t_escape_high: float
    t_reached: float = math.nan
    kind = "BlowUp"

    def __post_init__(self):
        for name in ("t_escape_low", "t_escape_high", "t_reached"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.t_escape_low < self.t_escape_high:
            raise StateError("blow-up bracket must satisfy low < high")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_escape_low + self.t_escape_high)

    @property
    def width(self) -> float:
        return self.t_escape_high - self.t_escape_low

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t_reached, "bracket": [self.t_escape_low, self.t_escape_high]}


@dataclass(frozen=True)
class LeftDomain:
    t_exit: float
    kind = "LeftDomain"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t_exit}


@dataclass(frozen=True)
class StepLimit:
    t_reached: float
    kind = "StepLimit"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t_reached}


Verdict = Completed | BlowUp | LeftDomain | StepLimit


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted steps of one integration run.

    ``states[i]`` is the state at ``times[i]``; ``monitors[name][i]`` the
    monitor value there. ``times[0]`` is the initial time.
    """

    times: np.ndarray
    states: np.ndarray
    monitors: Mapping[str, np.ndarray]
    verdict: Verdict
    config: IntegratorConfig = field(default_factory=IntegratorConfig)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)


class _FieldFailure(Exception):
    def __init__(self, t):
        super().__init__(t)
        self.t = t


def _escape_clock(y: np.ndarray, dy: np.ndarray) -> float:
    """||y||^2 / (y . dy), the reciprocal log-derivative of the norm.

    For ||y|| ~ C (t* - t)^-p this equals (t* - t)/p: linear in t with its
    zero at the escape time, whatever the exponent p.
    """
    rate = float(np.dot(y, dy))
    if rate <= 0 or not math.isfinite(rate):
        return math.nan
    return float(np.dot(y, y)) / rate


def _escape_bracket(samples, t_last: float, n_steps: int, rel_tol: float) -> BlowUp:
    """Bracket the escape time from the last accepted (t, clock) samples.

    The linear fit of the clock gives the escape time of the *numerical*
    solution. That differs from the exact one by the global integration error,
    bounded here by n_steps * rel_tol (relative to the escape time), so the
    bracket is widened by that amount and by the disagreement between the
    full fit and the last two-point secant.
    """
    pts = [(t, c) for t, c in samples if math.isfinite(c)]
    estimates = []
    if len(pts) >= 2:
        ts = np.array([p[0] for p in pts])
        cs = np.array([p[1] for p in pts])
        slope, icpt = np.polyfit(ts - ts[-1], cs, 1)
        if slope < 0:
            estimates.append(ts[-1] - icpt / slope)
        (t0, c0), (t1, c1) = pts[-2], pts[-1]
        if c1 < c0 and t1 > t0:
            estimates.append(t1 + c1 * (t1 - t0) / (c0 - c1))
    if not estimates and pts:
        estimates.append(pts[-1][0] + pts[-1][1])
    if not estimates:
        estimates.append(t_last)
    t_star = max(estimates[0], t_last)
    spread = max(estimates) - min(estimates)
    allowance = max(n_steps, 1) * rel_tol * max(1.0, abs(t_star))
    margin = max(allowance, spread, t_star - t_last)
    return BlowUp(min(t_last, t_star - margin), t_star + margin, t_reached=t_last)


def _bisect_exit(dense, domain, t_lo: float, t_hi: float) -> tuple[float, float]:
    while t_hi - t_lo > DOMAIN_BISECTION_TOL:
        mid = 0.5 * (t_lo + t_hi)
        if mid <= t_lo or mid >= t_hi:
            break
        if domain(dense(mid)):
            t_lo = mid
        else:
            t_hi = mid
    return t_lo, t_hi


def integrate(
    field: Field,
    y0,
    t_max: float,
    config: IntegratorConfig | None = None,
    domain: Callable[[np.ndarray], bool] | None = None,
    monitors: Mapping[str, Monitor] | None = None,
) -> Trajectory:
    """Integrate ``y' = field(y)`` from ``y0`` over ``[0, t_max]``.

    Parameters
    ----------
    field : callable
        Autonomous right-hand side, ``state -> derivative``.
    y0 : array_like
        Initial state; must satisfy ``domain`` when one is given.
    t_max : float
        Integration horizon (> 0).
    config : IntegratorConfig, optional
        Tolerances and termination thresholds; defaults are fixed so runs are
        reproducible.
    domain : callable, optional
        State predicate; the first accepted step that violates it ends the run
        with ``LeftDomain`` at the bisected exit time.
    monitors : mapping, optional
        Named scalar functions of the state, recorded at every accepted step.

    Returns
    -------
    Trajectory
    """
    config = config or IntegratorConfig()
    monitors = dict(monitors or {})
    y0 = np.array(y0, dtype=float).ravel()
    if not (t_max > 0 and math.isfinite(t_max)):
        raise InputError("t_max must be positive and finite")
    if y0.size == 0 or not np.all(np.isfinite(y0)):
        raise InputError("y0 must be a non-empty finite vector")
    if domain is not None and not domain(y0):
        raise InputError("initial state lies outside the domain")

    def rhs(t, y):
        try:
            dy = np.asarray(field(y), dtype=float)
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            raise _FieldFailure(t) from exc
        if dy.shape != y.shape:
            raise InputError(f"field returned shape {dy.shape}, expected {y.shape}")
        if not np.all(np.isfinite(dy)):
            raise _FieldFailure(t)
        return dy

    try:
        rhs(0.0, y0)
    except _FieldFailure:
        raise InputError("field is not finite at the initial state") from None

    times = [0.0]
    states = [y0.copy()]
    mon_vals = {name: [float(m(y0))] for name, m in monitors.items()}

    def record(t, y):
        times.append(float(t))
        states.append(np.array(y, dtype=float))
        for name, m in monitors.items():
            mon_vals[name].append(float(m(y)))

    max_step = config.h_max if math.isfinite(config.h_max) else np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        solver = DOP853(rhs, 0.0, y0, t_max, rtol=config.rel_tol, atol=config.abs_tol, max_step=max_step)
    clock = deque(maxlen=ESCAPE_FIT_SAMPLES)
    n_steps = 0
    verdict: Verdict | None = None

    while verdict is None:
        t_old, y_old = solver.t, solver.y.copy()
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                message = solver.step()
        except _FieldFailure as failure:
            high = max(failure.t, t_old + config.h_min)
            verdict = BlowUp(t_old, high, t_reached=t_old)
            break
        if solver.status == "failed":
            # step size underflow: treat as a singularity at the current time
            if clock:
                verdict = _escape_bracket(clock, t_old, n_steps, config.rel_tol)
            else:
                verdict = BlowUp(t_old, np.nextafter(t_old, np.inf), t_reached=t_old)
            break
        t_new, y_new = solver.t, solver.y
        n_steps += 1

        if domain is not None and not domain(y_new):
            dense = solver.dense_output()
            t_lo, t_hi = _bisect_exit(dense, domain, t_old, t_new)
            if t_lo > t_old:
                record(t_lo, dense(t_lo))
            verdict = LeftDomain(float(0.5 * (t_lo + t_hi)))
            break

        record(t_new, y_new)
        clock.append((t_new, _escape_clock(y_new, solver.f)))

        norm_new = float(np.linalg.norm(y_new))
        if norm_new > config.blowup_norm:
            norm_old = float(np.linalg.norm(y_old))
            if (t_new - t_old) < config.h_min or norm_new >= 2.0 * norm_old:
                verdict = _escape_bracket(clock, t_new, n_steps, config.rel_tol)
                break
        if solver.status == "finished":
            verdict = Completed(float(t_new))
        elif n_steps >= config.max_steps:
            verdict = StepLimit(float(t_new))
        elif message is not None and solver.status != "running":
            verdict = StepLimit(float(t_new))

    return Trajectory(
        times=np.array(times),
        states=np.vstack(states),
        monitors={k: np.array(v) for k, v in mon_vals.items()},
        verdict=verdict,
        config=config,
    )


def escape_time_bracket(trajectory: Trajectory) -> tuple[float, float]:
    """(low, high) bracket of the escape time of a blown-up trajectory."""
    v = trajectory.verdict
    if not isinstance(v, BlowUp):
        raise StateError(f"trajectory ended with {v.kind}, not BlowUp")
    return v.t_escape_low, v.t_escape_high


def max_drift(trajectory: Trajectory, monitor_name: str) -> float:
    """max_t |m(t) - m(0)| / max(1, |m(0)|)."""
    try:
        m = trajectory.monitors[monitor_name]
    except KeyError:
        raise InputError(
            f"unknown monitor {monitor_name!r}; have {sorted(trajectory.monitors)}"
        ) from None
    m0 = m[0]
    return float(np.max(np.abs(m - m0)) / max(1.0, abs(m0)))


def write_csv(trajectory: Trajectory, path) -> None:
    """One row per accepted step: ``t,y0,y1,...,m:<monitor>...`` at 17 significant digits."""
    names = list(trajectory.monitors)
    dim = trajectory.states.shape[1]
    header = ["t"] + [f"y{i}" for i in range(dim)] + [f"m:{n}" for n in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, t in enumerate(trajectory.times):
            row = [t, *trajectory.states[i], *(trajectory.monitors[n][i] for n in names)]
            writer.writerow([f"{x:.17g}" for x in row])
