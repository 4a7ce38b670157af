import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from geoflow import chart
from geoflow.errors import InputError
from geoflow.expr import compile_expr, coordinate_names, kundt_from_expressions


def test_coordinate_names():
    assert coordinate_names(2) == ("u", "v", "x1", "x2")


def test_value_and_gradient():
    c = compile_expr("x1^2*sin(u) + 3*v - exp(-x2)/2", 2)
    p = np.array([0.4, -1.0, 1.5, 0.2])
    expected = 1.5 ** 2 * math.sin(0.4) - 3.0 - math.exp(-0.2) / 2
    assert c.value(p) == pytest.approx(expected, rel=1e-15)
    grad = [1.5 ** 2 * math.cos(0.4), 3.0, 2 * 1.5 * math.sin(0.4), math.exp(-0.2) / 2]
    assert_allclose(c.gradient(p), grad, rtol=1e-14)


def test_caret_is_power():
    assert compile_expr("2^3", 1).value(np.zeros(3)) == 8.0


def test_depends_on():
    c = compile_expr("cos(x1) + u", 1)
    assert c.depends_on("u") and not c.depends_on("v")


@pytest.mark.parametrize(
    "text",
    ['__import__("os")', "x3", "a.b", "x1 x1", "", "lambda: 1", "x1; 1", "tan(u)", "x1[0]", "u == v"],
)
def test_rejects_outside_grammar(text):
    with pytest.raises(InputError):
        compile_expr(text, 2)


def test_kundt_from_expressions_matches_closure_metric(rng):
    m = kundt_from_expressions(1, "x1^2*cos(u)", ["sin(x1)"], ["1 + u^2"])
    ref = chart.kundt(
        1,
        lambda p: p[2] ** 2 * math.cos(p[0]),
        lambda p: np.array([-p[2] ** 2 * math.sin(p[0]), 0.0, 2 * p[2] * math.cos(p[0])]),
        [lambda p: math.sin(p[2])],
        [lambda p: np.array([0.0, 0.0, math.cos(p[2])])],
        lambda p: np.array([[1.0 + p[0] ** 2]]),
        lambda p: np.array([[[2 * p[0]]], [[0.0]], [[0.0]]]),
    )
    for p in m.sample_points(10, rng):
        assert_allclose(m.g(p), ref.g(p), rtol=1e-14)
        assert_allclose(m.dg(p), ref.dg(p), rtol=1e-14, atol=1e-15)


def test_kundt_defaults():
    m = kundt_from_expressions(2, "0")
    p = np.zeros(4)
    assert_allclose(m.g(p), [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def test_kundt_rejects_asymmetric_h():
    with pytest.raises(InputError):
        kundt_from_expressions(2, "0", None, ["1", "x1", "0", "1"])


def test_kundt_rejects_wrong_counts():
    with pytest.raises(InputError):
        kundt_from_expressions(2, "0", ["1"])
    with pytest.raises(InputError):
        kundt_from_expressions(2, "0", None, ["1"])
