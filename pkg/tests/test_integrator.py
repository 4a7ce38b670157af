import csv
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from geoflow import lie
from geoflow.errors import InputError, StateError
from geoflow.integrator import (
    BlowUp,
    Completed,
    IntegratorConfig,
    LeftDomain,
    StepLimit,
    escape_time_bracket,
    integrate,
    max_drift,
    write_csv,
)

RICCATI_FAMILY = [(c, t0) for c in (0.5, 1.0, 2.0) for t0 in (0.5, 1.0, 2.0, 4.0)]


def riccati(c):
    return lambda y: c * y * y


def oscillator(y):
    return np.array([y[1], -y[0]])


# -- config ---------------------------------------------------------------------

@pytest.mark.parametrize(
    "bad",
    [{"rel_tol": 0}, {"abs_tol": -1}, {"h_min": 0}, {"h_min": 2.0, "h_max": 1.0}, {"blowup_norm": 1.0},
     {"max_steps": 0}],
)
def test_invalid_config(bad):
    with pytest.raises(InputError):
        IntegratorConfig(**bad)


def test_config_replace_rejects_unknown_key():
    with pytest.raises(InputError):
        IntegratorConfig().replace(tolerance=1e-3)


def test_config_defaults():
    cfg = IntegratorConfig()
    assert (cfg.rel_tol, cfg.abs_tol, cfg.h_min, cfg.blowup_norm, cfg.max_steps) == (1e-10, 1e-12, 1e-14, 1e8, 10 ** 7)


# -- verdicts -----------------------------------------------------------------------

def test_constant_field_completes():
    tr = integrate(lambda y: np.zeros(2), np.array([1.0, 2.0]), 10.0, monitors={"y1": lambda y: y[0]})
    assert tr.verdict == Completed(10.0)
    assert_array_equal(tr.states, np.tile([1.0, 2.0], (len(tr), 1)))
    assert max_drift(tr, "y1") == 0.0


def test_exponential_growth_completes():
    tr = integrate(lambda y: y, np.array([1.0]), 5.0)
    assert isinstance(tr.verdict, Completed)
    assert abs(tr.final_state[0] - math.e ** 5) / math.e ** 5 <= 1e-8


def test_fast_complete_growth_is_not_blowup():
    # exponential growth far past the escape radius never halves the step below h_min
    tr = integrate(lambda y: y, np.array([1.0]), 30.0)
    assert isinstance(tr.verdict, Completed)


@pytest.mark.parametrize("c,t0", RICCATI_FAMILY)
def test_blowup_bracket_contains_escape_time(c, t0):
    tr = integrate(riccati(c), np.array([t0]), 100.0)
    assert isinstance(tr.verdict, BlowUp)
    lo, hi = escape_time_bracket(tr)
    escape = 1.0 / (c * t0)
    assert lo <= escape <= hi
    assert lo <= tr.verdict.t_reached <= hi
    assert hi - lo < 0.02 * escape


def test_half_riccati_example():
    tr = integrate(riccati(0.5), np.array([1.0]), 10.0)
    lo, hi = escape_time_bracket(tr)
    assert lo <= 2.0 <= hi and hi - lo < 0.02


def test_blowup_bracket_requires_order():
    with pytest.raises(StateError):
        BlowUp(1.0, 1.0)


def test_escape_bracket_on_completed_raises():
    tr = integrate(lambda y: -y, np.array([1.0]), 1.0)
    with pytest.raises(StateError):
        escape_time_bracket(tr)


def test_domain_exit_located():
    tr = integrate(lambda y: np.array([-1.0]), np.array([1.0]), 10.0, domain=lambda y: y[0] > 0)
    assert isinstance(tr.verdict, LeftDomain)
    assert abs(tr.verdict.t_exit - 1.0) <= 1e-10
    assert np.all(tr.states[:, 0] > 0)


def test_non_finite_field_is_blowup():
    def field(y):
        return np.array([math.nan]) if y[0] > 1.5 else np.array([1.0])

    tr = integrate(field, np.array([1.0]), 10.0)
    assert isinstance(tr.verdict, BlowUp)


def test_step_limit():
    tr = integrate(oscillator, np.array([1.0, 0.0]), 100.0, config=IntegratorConfig(max_steps=5))
    assert isinstance(tr.verdict, StepLimit)
    assert len(tr) == 6


def test_invalid_t_max():
    with pytest.raises(InputError):
        integrate(oscillator, np.array([1.0, 0.0]), 0.0)


def test_initial_state_outside_domain():
    with pytest.raises(InputError):
        integrate(lambda y: y, np.array([-1.0]), 1.0, domain=lambda y: y[0] > 0)


# -- trajectories and monitors --------------------------------------------------------

def test_trajectory_shape_and_monotone_times():
    tr = integrate(oscillator, np.array([1.0, 0.0]), 20.0, monitors={"r2": lambda y: y @ y})
    assert np.all(np.diff(tr.times) > 0)
    assert tr.states.shape == (len(tr), 2)
    assert len(tr.monitors["r2"]) == len(tr)


def test_oscillator_drift():
    tr = integrate(oscillator, np.array([1.0, 0.0]), 100.0, monitors={"r2": lambda y: y @ y})
    assert max_drift(tr, "r2") <= 1e-8
    assert_allclose(tr.final_state, [math.cos(100.0), -math.sin(100.0)], atol=1e-8)


def test_euler_arnold_energy_drift():
    mla = lie.aff_r()
    q = mla.form.matrix
    tr = integrate(mla.field(), np.array([0.3, 0.5, 0.7]), 100.0, monitors={"energy": lambda y: y @ q @ y})
    assert isinstance(tr.verdict, Completed)
    assert max_drift(tr, "energy") <= 1e-8


def test_unknown_monitor():
    tr = integrate(oscillator, np.array([1.0, 0.0]), 1.0)
    with pytest.raises(InputError):
        max_drift(tr, "nope")


def test_tighter_tolerance_does_not_worsen_drift():
    q = lambda y: y @ y
    loose = integrate(oscillator, np.array([1.0, 0.0]), 100.0, monitors={"r2": q})
    tight = integrate(oscillator, np.array([1.0, 0.0]), 100.0, monitors={"r2": q},
                      config=IntegratorConfig(rel_tol=5e-11, abs_tol=5e-13))
    assert max_drift(tight, "r2") <= max_drift(loose, "r2")


def test_deterministic():
    a = integrate(riccati(1.0), np.array([1.0]), 10.0)
    b = integrate(riccati(1.0), np.array([1.0]), 10.0)
    assert_array_equal(a.times, b.times)
    assert_array_equal(a.states, b.states)
    assert a.verdict == b.verdict


def test_write_csv(tmp_path):
    tr = integrate(oscillator, np.array([1.0, 0.0]), 1.0, monitors={"r2": lambda y: y @ y})
    path = tmp_path / "t.csv"
    write_csv(tr, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "y0", "y1", "m:r2"]
    assert len(rows) == len(tr) + 1
    assert float(rows[-1][0]) == tr.times[-1]
    assert float(rows[-1][1]) == tr.states[-1, 0]


def test_verdict_dicts():
    assert Completed(2.0).to_dict() == {"kind": "Completed", "t": 2.0}
    assert LeftDomain(1.5).to_dict() == {"kind": "LeftDomain", "t": 1.5}
    d = BlowUp(1.0, 2.0, 1.5).to_dict()
    assert d == {"kind": "BlowUp", "t": 1.5, "bracket": [1.0, 2.0]}
