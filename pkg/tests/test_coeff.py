import math

import numpy as np
import pytest
from pydantic import ValidationError

from dext.coeff import (
    Coefficient,
    Constant,
    HalfLine,
    Interval,
    Line,
    Piece,
    Piecewise,
    Polynomial,
    PowerLaw,
    Tabulated,
    estimate_slope,
)
from dext.errors import CoefficientDomainError, JointDerivativeError


def test_power_law_values_on_both_sides():
    c = Coefficient(
        model=PowerLaw(
            amplitude_left=2.0, exponent_left=0.5, exponent_right=1.5
        ),
        domain=Line(),
    )
    assert c.eval(4.0) == pytest.approx(8.0)
    assert c.eval(-4.0) == pytest.approx(4.0)
    assert c.eval(0.0) == 0.0
    values = c.eval(np.array([-1.0, 0.0, 1.0]))
    np.testing.assert_allclose(values, [2.0, 0.0, 1.0])


def test_power_law_zero_and_exponent(power_line):
    c = power_line(1.25)
    assert c.zero_set().points == [0.0]
    assert c.local_exponent(0.0, "right") == (1.25, True)
    assert c.local_exponent(0.0, "left") == (1.25, True)
    assert c.exponent_at_infinity("right") == (1.25, True)


def test_eval_outside_domain_raises(power_half):
    c = power_half(1.0)
    with pytest.raises(CoefficientDomainError):
        c.eval(-1.0)


def test_derivative_at_cusp_needs_a_side(power_line):
    c = power_line(0.5)
    with pytest.raises(JointDerivativeError):
        c.eval_derivative(0.0)
    assert c.eval_derivative(0.0, side="right") == math.inf
    assert power_line(2.0).eval_derivative(0.0) == 0.0


def test_inverse_integral_closed_forms(power_half):
    assert power_half(0.5).inverse_integral(0.0, 1.0) == pytest.approx(2.0)
    assert power_half(1.25).inverse_integral(0.0, 1.0) == math.inf
    assert power_half(1.0).inverse_integral(0.0, 1.0) == math.inf
    # 4 (eps^-1/4 - 1) with eps = 1e-4
    assert power_half(1.25).inverse_integral(1e-4, 1.0) == pytest.approx(36.0)
    assert power_half(1.0).inverse_integral(1e-3, 1.0) == pytest.approx(
        math.log(1e3)
    )


def test_polynomial_roots_with_multiplicity():
    bump = Polynomial(coefficients=[0.0, 0.0, 1.0, -2.0, 1.0])
    roots = bump.roots
    assert len(roots) == 2
    assert roots[0] == (0.0, 2)
    assert roots[1][0] == pytest.approx(1.0)
    assert roots[1][1] == 2

    c = Coefficient(model=bump, domain=Interval(a=0.0, b=1.0))
    assert c.zero_set().points == pytest.approx([0.0, 1.0])
    assert c.local_exponent(1.0, "left") == (2.0, True)
    assert c.eval(0.5) == pytest.approx(1.0 / 16.0)
    assert c.inverse_integral(0.0, 0.5) == math.inf


def test_constant_zero_is_a_plateau():
    c = Coefficient(model=Constant(value=0.0), domain=Interval(a=0.0, b=1.0))
    zs = c.zero_set()
    assert zs.points == []
    assert zs.plateaus == [(0.0, 1.0)]


def test_tabulated_interpolates_and_finds_zero():
    table = Tabulated(x=[0.0, 1.0, 2.0, 3.0], c=[0.0, 1.0, 4.0, 9.0])
    c = Coefficient(model=table, domain=Interval(a=0.0, b=3.0))
    np.testing.assert_allclose(c.eval(np.array([1.0, 2.0])), [1.0, 4.0])
    assert c.zero_set().points == [0.0]
    assert table.difference_quotient(0.0, 1.0) == pytest.approx(1.0)
    assert table.difference_quotient(2.0, 1.0) == pytest.approx(5.0)


def test_tabulated_must_cover_domain():
    with pytest.raises(ValidationError):
        Coefficient(model=Tabulated(x=[0.0, 1.0], c=[0.0, 1.0]), domain=Line())


def test_tabulated_rejects_negative_values():
    with pytest.raises(ValidationError):
        Tabulated(x=[0.0, 1.0], c=[1.0, -1.0])


def test_piecewise_joint_derivative_jump():
    model = Piecewise(
        pieces=[
            Piece(lower=-math.inf, upper=1.0, model=Constant(value=1.0)),
            Piece(
                lower=1.0,
                upper=math.inf,
                model=PowerLaw(exponent_left=2.0, exponent_right=2.0),
            ),
        ]
    )
    c = Coefficient(model=model, domain=Line())
    assert model.derivative_jumps() == [(1.0, 0.0, 2.0)]
    with pytest.raises(JointDerivativeError) as info:
        c.eval_derivative(1.0)
    assert info.value.left == 0.0
    assert info.value.right == 2.0
    assert c.eval_derivative(1.0, side="right") == pytest.approx(2.0)
    assert c.eval(3.0) == pytest.approx(9.0)
    assert c.zero_set().is_empty


def test_piecewise_must_be_continuous():
    with pytest.raises(ValidationError):
        Piecewise(
            pieces=[
                Piece(lower=-1.0, upper=0.0, model=Constant(value=1.0)),
                Piece(
                    lower=0.0,
                    upper=1.0,
                    model=PowerLaw(exponent_left=1.0, exponent_right=1.0),
                ),
            ]
        )


def test_unknown_model_key_is_rejected():
    with pytest.raises(ValidationError) as info:
        Coefficient.model_validate(
            {"model": {"kind": "power_law", "exponnent": 1.0}, "domain": {}}
        )
    assert "exponnent" in str(info.value)


def test_estimate_slope_of_a_power():
    assert estimate_slope(lambda d: 3.0 * d**0.75, 1.0) == pytest.approx(0.75)


def test_half_line_on_the_left(power_half):
    c = power_half(0.5, side="left")
    assert c.bounds == (-math.inf, 0.0)
    assert c.eval(-4.0) == pytest.approx(2.0)
    assert isinstance(c.domain, HalfLine)
