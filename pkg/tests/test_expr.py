import numpy as np
import pytest

from bdlab.expr import Expression, ExpressionError, as_field


def test_evaluates_on_arrays():
    e = Expression("exp(-pi*x2)*cos(pi*x1)*exp(-pi*t)")
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(e(x, 0.2, 0.1), np.exp(-np.pi * 0.3) * np.cos(np.pi * x))


def test_polar_variables():
    e = Expression("r*cos(theta)")
    x1, x2 = np.array([0.3, -0.2]), np.array([0.4, 0.1])
    np.testing.assert_allclose(e(x1, x2), x1)


def test_constant_detection():
    assert Expression("2*pi").is_constant
    assert not Expression("x1 + 1").is_constant
    assert Expression("t*x1").depends_on_time
    assert not Expression("x1").depends_on_time


def test_constant_broadcasts_to_node_shape():
    out = Expression(3.0)(np.zeros(4), np.zeros(4), 0.0)
    np.testing.assert_array_equal(out, 3.0)


@pytest.mark.parametrize(
    "text",
    ["__import__('os')", "x1.real", "lambda: 1", "y + 1", "sin", "sin(x1, x2)", "'a'", "[1, 2]", "True"],
)
def test_rejects_outside_grammar(text):
    with pytest.raises(ExpressionError):
        Expression(text)


def test_symbolic_derivative():
    d = Expression("0.1*x1**2").derivative("x1")
    np.testing.assert_allclose(d(np.array([1.0, 2.0])), [0.2, 0.4])


def test_as_field():
    assert as_field(2)(0.0, 0.0, 0.0) == 2.0
    assert as_field("x1")(3.0, 0.0, 0.0) == 3.0

    def fn(x1, x2, t):
        return x1 + t

    assert as_field(fn) is fn
    with pytest.raises(TypeError):
        as_field(object())
