import csv
import math

import numpy as np
import pytest

from dext.classify import classify
from dext.coeff import Coefficient, Constant, HalfLine, Interval
from dext.errors import CoefficientError, HypothesisViolatedError
from dext.grid_op import HalfLineGeometry, build_mesh
from dext.shoot import (
    blowup_check,
    deficiency_index,
    deficiency_solution,
    deficiency_vector,
    eta_properties,
    integrate_deficiency,
    operator_deficiency,
)


@pytest.fixture
def flat() -> Coefficient:
    return Coefficient(model=Constant(value=1.0), domain=HalfLine())


def test_exponential_solution(flat):
    sol = integrate_deficiency(flat, 1.0, 0.0, (1.0, -1.0), 5.0)
    np.testing.assert_allclose(sol.psi, np.exp(-sol.grid), rtol=0, atol=1e-6)
    np.testing.assert_allclose(sol.flux, -np.exp(-sol.grid), rtol=0, atol=1e-6)
    assert sol.l2_partial[-1] == pytest.approx(0.5 * (1.0 - math.exp(-10.0)))
    assert np.all(np.diff(sol.l2_partial) >= 0.0)
    assert not sol.truncated


def test_seed_must_not_vanish(flat):
    with pytest.raises(CoefficientError):
        integrate_deficiency(flat, 1.0, 0.0, (0.0, 0.0), 1.0)
    with pytest.raises(CoefficientError):
        integrate_deficiency(flat, -1.0, 0.0, (1.0, 0.0), 1.0)


def test_l2_mass_diverges_toward_a_strong_degeneracy(power_half):
    c = power_half(2.0)
    masses = []
    for eps in (1e-2, 1e-3, 1e-4):
        sol = integrate_deficiency(c, 1.0, 1.0, (0.0, -1.0), eps)
        masses.append(sol.l2_partial[-1])
    assert masses[2] - masses[1] > 3.0 * (masses[1] - masses[0])


@pytest.mark.parametrize("delta", [0.25, 0.5, 1.0, 1.25, 1.4, 1.5, 2.0])
def test_deficiency_index_agrees_with_the_case(power_half, delta):
    c = power_half(delta)
    verdict = deficiency_index(c, "right", 1.0)
    assert verdict.index == (1 if delta < 1.5 else 0)
    assert (verdict.index == 0) == (classify(c).case == "I")


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_deficiency_index_on_both_sides(power_line, gamma):
    c = power_line(1.25)
    assert deficiency_index(c, "left", gamma).index == 1
    assert deficiency_index(c, "right", gamma).index == 1
    assert deficiency_index(power_line(2.0), "left", gamma).index == 0


def test_line_index_needs_both_sides(power_line, power_half):
    lopsided = operator_deficiency(power_line(2.0, d_right=0.5))
    assert lopsided.index == 0
    assert lopsided.side_index("left") == 0
    assert lopsided.side_index("right") == 1
    assert operator_deficiency(power_line(1.25)).index == 1
    assert operator_deficiency(power_half(1.25, side="left")).index == 1


def test_operator_deficiency_refuses_an_interval():
    c = Coefficient(model=Constant(value=1.0), domain=Interval(a=0.0, b=1.0))
    with pytest.raises(CoefficientError):
        operator_deficiency(c)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_eta_is_positive_and_non_increasing(power_half, gamma):
    c = power_half(1.25)
    sol = deficiency_solution(c, "right", gamma, 10.0)
    assert sol.l2_partial.max() == pytest.approx(1.0)
    props = eta_properties(sol, classify(c).profile("right"))
    assert props.positive
    assert props.non_increasing
    assert props.lp_member(3.5)
    assert not props.lp_member(4.5)
    assert not props.lp_member(math.inf)


def test_eta_tail_follows_nu(power_half):
    sol = deficiency_solution(power_half(1.25), "right", 1.0, 10.0)
    # eta ~ nu ~ x^-1/4 near the origin
    assert sol.lp_tail_exponent == pytest.approx(0.25, abs=0.02)
    props = eta_properties(sol)
    assert props.critical_lp_exponent == pytest.approx(4.0, rel=0.1)


def test_eta_without_degeneracy_is_bounded(flat):
    sol = deficiency_solution(flat, "right", 1.0, 10.0)
    props = eta_properties(sol)
    assert props.positive
    assert props.non_increasing
    assert props.lp_member(math.inf)


def test_deficiency_vector_on_a_mesh(power_half):
    mesh = build_mesh(HalfLineGeometry(), 200)
    eta = deficiency_vector(power_half(0.5), 1.0, mesh)
    assert eta.shape == (200,)
    assert np.all(eta >= 0.0)
    assert np.all(np.diff(eta) <= 1e-12)


def test_solution_csv(tmp_path, flat):
    sol = integrate_deficiency(flat, 1.0, 0.0, (1.0, -1.0), 2.0)
    path = tmp_path / "eta.csv"
    sol.to_csv(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["x", "psi", "flux", "l2_partial"]
    assert len(rows) == sol.grid.size + 1
    assert float(rows[1][1]) == pytest.approx(1.0)


def test_blowup_of_the_cosh(flat):
    result = blowup_check(flat, 0.0, 5.0)
    assert result.monotone_square
    assert result.growth_factor == pytest.approx(math.cosh(5.0) ** 2, rel=1e-6)
    assert result.wronskian_drift < 1e-6


def test_blowup_with_dirichlet_limit(flat):
    result = blowup_check(flat, "dirichlet", 5.0)
    assert result.monotone_square
    assert result.x_first > result.x0
    assert result.growth_factor > 1e3


def test_blowup_grows_without_bound(power_half):
    c = power_half(2.0)
    near = blowup_check(c, 1.0, 10.0)
    far = blowup_check(c, 1.0, 100.0)
    assert near.monotone_square
    assert far.monotone_square
    assert far.growth_factor > 10.0 * near.growth_factor


def test_blowup_refuses_without_growth(power_half):
    with pytest.raises(HypothesisViolatedError) as info:
        blowup_check(power_half(3.0), 1.0, 10.0)
    assert "growth hypothesis violated" in info.value.message


def test_blowup_needs_the_right_far_field():
    c = Coefficient(model=Constant(value=1.0), domain=HalfLine(side="left"))
    with pytest.raises(CoefficientError) as info:
        blowup_check(c, 0.0, 5.0)
    assert "right far field" in info.value.message
