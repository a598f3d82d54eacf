import math

import numpy as np
import pytest

from dext.coeff import (
    Coefficient,
    Constant,
    Interval,
    Line,
    Piece,
    Piecewise,
    Polynomial,
    PowerLaw,
)
from dext.decompose import (
    assemble_direct_sum,
    block_diagonal,
    decompose,
    evolve_direct_sum,
    restrict,
)
from dext.errors import AssemblyError, DextError
from dext.evolve import evolve


@pytest.fixture
def bump() -> Coefficient:
    return Coefficient(
        model=Polynomial(coefficients=[0.0, 0.0, 1.0, -2.0, 1.0]),
        domain=Interval(a=0.0, b=1.0),
    )


@pytest.fixture
def plateau() -> Coefficient:
    """(x+1)^2 left of -1, zero on [-1, 1], (x-1)^2 right of 1."""
    square = dict(exponent_left=2.0, exponent_right=2.0)
    return Coefficient(
        model=Piecewise(
            pieces=[
                Piece(
                    lower=-math.inf,
                    upper=-1.0,
                    model=PowerLaw(center=-1.0, **square),
                ),
                Piece(lower=-1.0, upper=1.0, model=Constant(value=0.0)),
                Piece(
                    lower=1.0, upper=math.inf, model=PowerLaw(center=1.0, **square)
                ),
            ]
        ),
        domain=Line(),
    )


def test_bump_is_one_component(bump):
    dec = decompose(bump)
    assert len(dec.components) == 1
    comp = dec.components[0]
    assert (comp.lower, comp.upper) == (0.0, pytest.approx(1.0))
    assert comp.lower_verdict == comp.upper_verdict == "degenerate"
    assert comp.report.case == "I"
    assert dec.zero_points == pytest.approx([0.0, 1.0])
    assert dec.lipschitz
    assert dec.unique_submarkovian


def test_two_components_do_not_exchange_mass(power_line):
    c = power_line(1.5)
    dec = decompose(c)
    assert [(comp.lower, comp.upper) for comp in dec.components] == [
        (-math.inf, 0.0),
        (0.0, math.inf),
    ]
    assert dec.components[0].lower_verdict == "infinite"
    assert dec.components[0].upper_verdict == "degenerate"
    assert dec.unique_submarkovian

    blocks = assemble_direct_sum(dec, c, n_cells=100)
    assert len(blocks) == 2
    whole = block_diagonal(blocks)
    n_left = blocks[0].mesh.n_cells
    u0 = np.concatenate([np.ones(n_left), np.zeros(blocks[1].mesh.n_cells)])
    trace = evolve(whole, u0, 1.0, 50)
    assert np.all(trace.snapshots[:, n_left:] == 0.0)

    parts = evolve_direct_sum(blocks, u0, 1.0, 50)
    joined = np.concatenate([part.snapshots[-1] for part in parts])
    np.testing.assert_allclose(joined, trace.snapshots[-1], rtol=1e-12, atol=1e-14)


def test_restrict_splits_by_block(power_line):
    c = power_line(1.5)
    blocks = assemble_direct_sum(decompose(c), c, n_cells=100)
    left, right = restrict(blocks, np.arange(200.0))
    assert left.size == right.size == 100
    assert right[0] == 100.0


def test_square_root_is_not_lipschitz(power_line):
    dec = decompose(power_line(0.5))
    assert not dec.lipschitz
    assert not dec.unique_submarkovian
    assert any("not Lipschitz at x0=0.0" in flag for flag in dec.flags)


def test_plateau_carries_the_zero_operator(plateau):
    dec = decompose(plateau)
    assert dec.plateau_blocks == [(-1.0, 1.0)]
    assert [(comp.lower, comp.upper) for comp in dec.components] == [
        (-math.inf, -1.0),
        (1.0, math.inf),
    ]
    assert dec.unique_submarkovian

    blocks = assemble_direct_sum(dec, plateau, n_cells=40)
    assert len(blocks) == 3
    middle = blocks[1]
    assert middle.mesh.nodes[0] == -1.0
    assert np.all(middle.face_conductance == 0.0)
    assert np.all(middle.boundary_terms == 0.0)
    whole = block_diagonal(blocks)
    assert whole.mesh.n_cells == sum(op.mesh.n_cells for op in blocks)


def test_blocks_must_be_adjacent(power_line):
    c = power_line(1.5)
    blocks = assemble_direct_sum(decompose(c), c, n_cells=100)
    with pytest.raises(AssemblyError):
        block_diagonal([])
    with pytest.raises(AssemblyError):
        block_diagonal([blocks[1], blocks[0]])
    with pytest.raises(DextError):
        evolve_direct_sum(blocks, np.ones(10), 1.0, 5)


def test_constant_coefficient_needs_no_split():
    c = Coefficient(model=Constant(value=2.0), domain=Interval(a=0.0, b=1.0))
    dec = decompose(c)
    assert len(dec.components) == 1
    assert dec.components[0].lower_verdict == "regular"
    assert dec.zero_points == []
