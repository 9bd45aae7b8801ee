import pytest
import sympy as sp

from ltvnull.expressions import ExpressionError, is_polynomial, parse, t, to_text


@pytest.mark.parametrize("text,expected", [
    ("0.5*t", t / 2),
    ("-(t/1)^(2-1)/((1+1)^1-1^1)", -t),
    ("3/4", sp.Rational(3, 4)),
    ("sin(2*t) + cos(t)*exp(-t)", sp.sin(2 * t) + sp.cos(t) * sp.exp(-t)),
    ("1/(t-1)^2", 1 / (t - 1) ** 2),
])
def test_accepted(text, expected):
    assert sp.simplify(parse(text) - expected) == 0


@pytest.mark.parametrize("text", ["sqrt(t)", "x + 1", "t^(1/2)", "log(t)", "", "t +", "pi*t",
                                  "3!"])
def test_rejected(text):
    with pytest.raises(ExpressionError):
        parse(text)


def test_numbers_pass_through_exactly():
    assert parse(0.1) == sp.Rational(1, 10)
    assert parse(7) == 7


def test_polynomial_detection_and_text():
    assert is_polynomial(parse("1 + t^3"))
    assert not is_polynomial(parse("sin(t)"))
    assert parse(to_text(parse("t^2/3 - 1"))) == parse("t^2/3 - 1")
