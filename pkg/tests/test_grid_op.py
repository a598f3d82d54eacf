import csv
import math

import numpy as np
import pytest
from pydantic import ValidationError

from dext.coeff import Coefficient, Constant, Interval
from dext.errors import AssemblyError, GradingUnderflowError, MeshError
from dext.grid_op import (
    Dirichlet,
    FriedrichsAuto,
    HalfLineGeometry,
    IntervalGeometry,
    LineGeometry,
    LineJump,
    NeumannFlux,
    Robin,
    assemble,
    beurling_deny,
    build_mesh,
    form_value,
    inner,
    l1_dissipativity,
    lowest_eigenpairs,
    resolve_bc,
    to_market,
)


def unit_interval(b: float = 1.0) -> Coefficient:
    return Coefficient(model=Constant(value=1.0), domain=Interval(a=0.0, b=b))


def uniform(b: float, n: int):
    return build_mesh(IntervalGeometry(a=0.0, b=b), n, graded_cells=0)


def test_half_line_mesh_grading():
    mesh = build_mesh(HalfLineGeometry(), 100, grading_ratio=0.5, graded_cells=20)
    w = mesh.widths
    assert mesh.nodes[0] == 0.0
    assert mesh.nodes[-1] == pytest.approx(10.0)
    np.testing.assert_allclose(w[1:21] / w[:20], 2.0)
    np.testing.assert_allclose(w[20:], w[20])
    assert mesh.cell_ratio == pytest.approx(2.0**20)
    assert mesh.truncation_length == 10.0


def test_interval_mesh_halves_toward_both_ends():
    mesh = build_mesh(IntervalGeometry(a=0.0, b=1.0), 8, grading_ratio=0.5)
    w = mesh.widths
    np.testing.assert_allclose(w, w[::-1])
    np.testing.assert_allclose(w[1:4] / w[:3], 2.0)
    assert mesh.nodes[-1] == 1.0


def test_line_mesh_is_symmetric():
    mesh = build_mesh(LineGeometry(), 16, grading_ratio=0.5)
    np.testing.assert_allclose(mesh.nodes, -mesh.nodes[::-1], atol=1e-14)
    assert mesh.interface == 8
    assert mesh.split_index == 8


@pytest.mark.parametrize(
    "geometry,n,ratio",
    [
        (HalfLineGeometry(), 100, 1.0),
        (HalfLineGeometry(), 7, 0.5),
        (LineGeometry(), 101, 0.5),
    ],
)
def test_mesh_preconditions(geometry, n, ratio):
    with pytest.raises(MeshError):
        build_mesh(geometry, n, grading_ratio=ratio)


def test_grading_underflow():
    with pytest.raises(GradingUnderflowError):
        build_mesh(HalfLineGeometry(), 100, grading_ratio=1e-20)


def test_truncation_follows_the_horizon():
    mesh = build_mesh(HalfLineGeometry(), 100, horizon=1.0, c_max=100.0)
    assert mesh.truncation_length == pytest.approx(60.0)
    assert mesh.nodes[-1] == pytest.approx(60.0)


def test_constant_coefficient_stencils():
    n = 10
    h = 1.0 / n
    mesh = uniform(1.0, n)
    H = assemble(unit_interval(), mesh, Dirichlet()).matrix.toarray()
    np.testing.assert_allclose(H[4, 3:6], np.array([-1.0, 2.0, -1.0]) / h**2)
    assert H[0, 0] == pytest.approx(3.0 / h**2)

    H = assemble(unit_interval(), mesh, NeumannFlux()).matrix.toarray()
    np.testing.assert_allclose(H[0, :2], np.array([1.0, -1.0]) / h**2)
    np.testing.assert_allclose(H.sum(axis=1), 0.0, atol=1e-9)


def test_friedrichs_resolution():
    assert isinstance(resolve_bc(FriedrichsAuto(), HalfLineGeometry()), Dirichlet)
    assert isinstance(
        resolve_bc(FriedrichsAuto(), IntervalGeometry(a=0.0, b=1.0)), Dirichlet
    )
    assert isinstance(
        resolve_bc(FriedrichsAuto(), LineGeometry(), case="II"), NeumannFlux
    )
    jump = resolve_bc(FriedrichsAuto(), LineGeometry(), case="III")
    assert isinstance(jump, LineJump)
    assert (jump.alpha, jump.beta) == (1.0, 0.0)
    robin = resolve_bc(Robin(alpha=1.0, beta=0.0), HalfLineGeometry())
    assert isinstance(robin, Dirichlet)
    with pytest.raises(AssemblyError):
        resolve_bc(LineJump(alpha=0.0, beta=1.0), HalfLineGeometry())
    with pytest.raises(AssemblyError):
        resolve_bc(FriedrichsAuto(), LineGeometry())


def test_pair_conditions_reject_zero_pair():
    with pytest.raises(ValidationError):
        Robin(alpha=0.0, beta=0.0)
    with pytest.raises(ValidationError):
        LineJump(alpha=0.0, beta=0.0)


def test_mesh_outside_the_domain(power_half):
    with pytest.raises(AssemblyError):
        assemble(power_half(0.5), build_mesh(LineGeometry(), 16), Dirichlet())


@pytest.mark.parametrize(
    "bc",
    [
        Robin(alpha=1.0, beta=1.0),
        Robin(alpha=-1.0, beta=1.0),
        Dirichlet(),
        NeumannFlux(),
    ],
)
def test_weighted_symmetry_and_form_identity(power_half, bc):
    op = assemble(power_half(0.5), build_mesh(HalfLineGeometry(), 200), bc)
    H = op.matrix.toarray()
    WH = op.mass_weights[:, None] * H
    np.testing.assert_allclose(WH, WH.T, rtol=0, atol=1e-12 * np.abs(WH).max())

    rng = np.random.default_rng(7)
    for _ in range(100):
        u = rng.normal(size=op.mesh.n_cells)
        expected = inner(op, u, op.apply(u))
        assert form_value(op, u) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_markov_structure_for_submarkovian_robin(power_half):
    op = assemble(
        power_half(0.5),
        build_mesh(HalfLineGeometry(), 200),
        Robin(alpha=1.0, beta=1.0),
    )
    A = op.stiffness.toarray()
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0.0)
    rows = A.sum(axis=1)
    assert np.all(rows >= -1e-12)
    np.testing.assert_allclose(rows[1:-1], 0.0, atol=1e-10)
    assert rows[0] == pytest.approx(1.0)


def test_form_values():
    n = 50
    op = assemble(unit_interval(), uniform(1.0, n), NeumannFlux())
    assert form_value(op, np.full(n, 4.0)) == 0.0
    # u = x sampled at centres: (n - 1) faces of (1/h) h^2
    assert form_value(op, op.mesh.centers) == pytest.approx(1.0 - 1.0 / n)


def test_robin_form_correction(power_half):
    op = assemble(
        power_half(0.5),
        build_mesh(HalfLineGeometry(), 100),
        Robin(alpha=2.0, beta=1.0),
        far_field="neumann",
    )
    assert form_value(op, np.full(100, 3.0)) == pytest.approx(18.0)


def test_line_jump_form_correction(power_line):
    mesh = build_mesh(LineGeometry(), 100)
    op = assemble(
        power_line(0.5), mesh, LineJump(alpha=2.0, beta=1.0), far_field="neumann"
    )
    step = np.where(np.arange(100) < mesh.interface, 0.0, 1.0)
    assert op.interface_coupling == pytest.approx(0.5)
    assert form_value(op, step) == pytest.approx(0.5)


def test_form_converges_at_second_order():
    errors = []
    for n in (20, 40, 80):
        op = assemble(unit_interval(), uniform(1.0, n), NeumannFlux())
        u = np.cos(math.pi * op.mesh.centers)
        errors.append(abs(form_value(op, u) - math.pi**2 / 2.0))
    assert errors[0] / errors[1] > 3.0
    assert errors[1] / errors[2] > 3.0


@pytest.mark.parametrize("delta", [1.0, 1.25])
def test_inaccessible_origin_decouples(power_line, delta):
    for n in (100, 200, 400):
        mesh = build_mesh(LineGeometry(), n)
        op = assemble(power_line(delta), mesh, FriedrichsAuto())
        assert isinstance(op.resolved_bc, NeumannFlux)
        assert op.interface_coupling == 0.0
        op = assemble(power_line(delta), mesh, LineJump(alpha=1.0, beta=0.0))
        assert op.interface_coupling == 0.0


def test_accessible_origin_couples(power_line):
    mesh = build_mesh(LineGeometry(), 100)
    op = assemble(power_line(0.5), mesh, FriedrichsAuto())
    assert isinstance(op.resolved_bc, LineJump)
    # 1 / int |x|^-1/2 over the two cells touching the origin
    w = mesh.widths[mesh.interface]
    assert op.interface_coupling == pytest.approx(1.0 / (4.0 * math.sqrt(w / 2.0)))


def test_dirichlet_eigenvalue_of_the_laplacian():
    op = assemble(unit_interval(math.pi), uniform(math.pi, 400), Dirichlet())
    (lam1, v1), (lam2, _) = lowest_eigenpairs(op, 2)
    assert lam1 == pytest.approx(1.0, rel=1e-3)
    assert lam2 == pytest.approx(4.0, rel=1e-3)
    assert inner(op, v1, v1) == pytest.approx(1.0)


def test_negative_robin_has_one_negative_eigenvalue(power_half):
    op = assemble(
        power_half(0.5),
        build_mesh(HalfLineGeometry(), 400),
        Robin(alpha=-1.0, beta=1.0),
    )
    (lam1, _), (lam2, _) = lowest_eigenpairs(op, 2)
    assert lam1 < 0.0 < lam2


@pytest.mark.parametrize("pair", [(1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (-1.0, -2.0)])
def test_submarkovian_robin_is_positive_semidefinite(power_half, pair):
    op = assemble(
        power_half(0.5),
        build_mesh(HalfLineGeometry(), 200),
        Robin(alpha=pair[0], beta=pair[1]),
    )
    lam1, _ = lowest_eigenpairs(op, 1)[0]
    assert lam1 >= -1e-10


def test_neumann_interval_kernel_is_constant():
    mesh = build_mesh(IntervalGeometry(a=0.0, b=1.0), 64)
    op = assemble(unit_interval(), mesh, NeumannFlux())
    lam1, v1 = lowest_eigenpairs(op, 1)[0]
    assert abs(lam1) < 1e-8
    np.testing.assert_allclose(v1, v1[0], rtol=1e-6)


def test_beurling_deny_follows_the_sign(power_half):
    mesh = build_mesh(HalfLineGeometry(), 100)
    good = assemble(
        power_half(0.5), mesh, Robin(alpha=1.0, beta=1.0), far_field="neumann"
    )
    bad = assemble(
        power_half(0.5), mesh, Robin(alpha=-1.0, beta=1.0), far_field="neumann"
    )
    assert beurling_deny(good).holds
    check = beurling_deny(bad)
    assert not check.holds
    assert check.clip_violation > 0.1


def test_l1_dissipativity(power_half):
    mesh = build_mesh(HalfLineGeometry(), 100)
    free = assemble(power_half(0.5), mesh, NeumannFlux(), far_field="neumann")
    assert l1_dissipativity(free) >= -1e-10
    bad = assemble(
        power_half(0.5), mesh, Robin(alpha=-1.0, beta=1.0), far_field="neumann"
    )
    assert l1_dissipativity(bad) < 0.0


def test_matrix_dump(tmp_path):
    op = assemble(unit_interval(), uniform(1.0, 8), Dirichlet())
    path = tmp_path / "matrix.csv"
    to_market(op, path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["row", "col", "value"]
    assert len(rows) == 1 + 8 + 2 * 7
    assert rows[1][:2] == ["1", "1"]
    assert float(rows[1][2]) == pytest.approx(3.0 * 64)
