import numpy as np
import pytest

from dext.errors import DextError, UnrealizedExtensionError
from dext.grid_op import (
    Dirichlet,
    HalfLineGeometry,
    IntervalGeometry,
    LineGeometry,
    LineJump,
    Robin,
    assemble,
    build_mesh,
)
from dext.krein import krein_check, positivity_transfer, resolvent


@pytest.fixture
def half_mesh():
    return build_mesh(HalfLineGeometry(), 400)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("pair", [(0.0, 1.0), (1.0, 1.0)])
def test_resolvent_difference_is_rank_one(power_half, half_mesh, gamma, pair):
    diag = krein_check(power_half(0.5), pair[0], pair[1], gamma, half_mesh)
    assert diag.extension == f"robin(alpha={pair[0]:g}, beta={pair[1]:g})"
    assert diag.baseline == "dirichlet"
    assert diag.rank_ratio < 1e-6
    assert diag.kappa > 0.0
    assert diag.range_alignment > 0.999


def test_kappa_shrinks_with_gamma(power_half, half_mesh):
    kappas = [
        krein_check(power_half(0.5), 1.0, 1.0, gamma, half_mesh).kappa
        for gamma in (0.5, 1.0, 2.0, 4.0)
    ]
    assert all(a > b for a, b in zip(kappas, kappas[1:]))


def test_line_jump_against_flux_continuity(power_line):
    mesh = build_mesh(LineGeometry(), 400)
    diag = krein_check(power_line(0.5), 1.0, 1.0, 1.0, mesh)
    assert diag.baseline == "line_jump(alpha=1, beta=0)"
    assert diag.rank_ratio < 1e-6
    assert diag.kappa > 0.0


def test_case_one_has_nothing_to_compare(power_line):
    mesh = build_mesh(LineGeometry(), 100)
    with pytest.raises(UnrealizedExtensionError) as info:
        krein_check(power_line(2.0), 0.0, 1.0, 1.0, mesh)
    assert "unique extension" in info.value.message


def test_case_two_with_alpha_is_unrealized(power_line):
    mesh = build_mesh(LineGeometry(), 100)
    with pytest.raises(UnrealizedExtensionError):
        krein_check(power_line(1.25), 1.0, 1.0, 1.0, mesh)
    diag = krein_check(power_line(1.25), 0.0, 1.0, 1.0, mesh)
    assert diag.kappa == 0.0


def test_interval_is_unrealized(power_interval):
    mesh = build_mesh(IntervalGeometry(a=0.0, b=1.0), 100)
    with pytest.raises(UnrealizedExtensionError):
        krein_check(power_interval(0.5), 1.0, 1.0, 1.0, mesh)


def test_resolvent_solves_the_shifted_system(power_half):
    mesh = build_mesh(HalfLineGeometry(), 40)
    op = assemble(power_half(0.5), mesh, Robin(alpha=1.0, beta=1.0))
    f = np.linspace(0.0, 1.0, 40)
    dense = 2.0 * np.eye(40) + op.matrix.toarray()
    np.testing.assert_allclose(resolvent(op, 2.0)(f), np.linalg.solve(dense, f))
    with pytest.raises(DextError):
        resolvent(op, 0.0)


def test_resolvents_preserve_positivity(power_half, half_mesh):
    c = power_half(0.5)
    ext = assemble(c, half_mesh, Robin(alpha=1.0, beta=1.0))
    base = assemble(c, half_mesh, Dirichlet())
    result = positivity_transfer(ext, base, 1.0)
    assert result.negative_extension == 0
    assert result.negative_baseline == 0


def test_line_jump_resolvent_preserves_positivity(power_line):
    c = power_line(0.5)
    mesh = build_mesh(LineGeometry(), 200)
    ext = assemble(c, mesh, LineJump(alpha=1.0, beta=1.0))
    base = assemble(c, mesh, LineJump(alpha=1.0, beta=0.0))
    result = positivity_transfer(ext, base, 0.5, trials=20)
    assert result.trials == 20
    assert result.negative_extension == 0
    assert result.negative_baseline == 0
