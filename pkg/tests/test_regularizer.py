import numpy as np
import pytest

from pyLifting.Capsules.Errors import ConfigError, DimensionError
from pyLifting.Labels.Lifting import LabelSpace, lift_field
from pyLifting.Terms.Regularizers import (
    ConstraintSet,
    PixelGrid,
    TVKind,
    div_adjoint,
    grad,
    lifted_tv,
    project_K,
    project_unit,
    scalar_tv,
)

SPACE = LabelSpace((0.0, 0.2, 0.5, 1.0))


def test_pixel_grid_rejects_empty_and_bad_spacing():
    with pytest.raises(ConfigError):
        PixelGrid(0, 4)
    with pytest.raises(ConfigError):
        PixelGrid(4, 4, h=0.0)


def test_grad_shape_and_neumann_boundary():
    grid = PixelGrid(3, 4)
    u = np.arange(12, dtype=float).reshape(3, 4)
    actual = grad(u, grid)
    assert actual.shape == (3, 4, 2)
    assert np.all(actual[-1, :, 0] == 0.0)
    assert np.all(actual[:, -1, 1] == 0.0)
    assert np.all(actual[:-1, :, 0] == 4.0)
    assert np.all(actual[:, :-1, 1] == 1.0)


def test_grad_scales_with_spacing():
    u = np.arange(12, dtype=float).reshape(3, 4)
    actual = grad(u, PixelGrid(3, 4, h=0.5))
    assert actual[0, 0, 1] == 2.0


def test_grad_rejects_field_on_other_grid():
    with pytest.raises(DimensionError):
        grad(np.zeros((3, 3)), PixelGrid(3, 4))


@pytest.mark.parametrize("shape, h", [((5, 7), 1.0), ((6, 3, 3), 0.5), ((1, 9, 2), 1.0)])
def test_div_adjoint_is_adjoint_of_grad(shape, h):
    rng = np.random.default_rng(0)
    grid = PixelGrid(shape[0], shape[1], h)
    u = rng.standard_normal(shape)
    q = rng.standard_normal(shape + (2,))
    lhs = float(np.sum(q * grad(u, grid)))
    rhs = float(np.sum(div_adjoint(q, grid) * u))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_gradient_norm_bound():
    rng = np.random.default_rng(1)
    grid = PixelGrid(8, 8)
    x = rng.standard_normal(grid.shape)
    for _ in range(100):
        x = div_adjoint(grad(x, grid), grid)
        x /= np.linalg.norm(x)
    actual = float(np.sum(grad(x, grid) ** 2))
    assert actual <= grid.operator_norm_sq


def test_project_K_aniso_clips_per_row():
    cset = ConstraintSet.for_space(SPACE, TVKind.ANISO)
    q = np.array([[1.0, -1.0], [0.1, 0.0], [-2.0, 0.3]])
    actual = project_K(q, cset)
    np.testing.assert_allclose(actual, [[0.2, -0.2], [0.1, 0.0], [-0.5, 0.3]])


def test_project_K_iso_scales_rows_into_balls():
    cset = ConstraintSet.for_space(SPACE, TVKind.ISO)
    q = np.array([[3.0, 4.0], [0.1, 0.0], [0.0, 0.0]])
    actual = project_K(q, cset)
    np.testing.assert_allclose(actual, [[0.12, 0.16], [0.1, 0.0], [0.0, 0.0]])


@pytest.mark.parametrize("kind", [TVKind.ISO, TVKind.ANISO])
def test_project_K_is_idempotent_and_feasible(kind):
    rng = np.random.default_rng(2)
    cset = ConstraintSet.for_space(SPACE, kind)
    q = rng.standard_normal((4, 4, 3, 2))
    once = project_K(q, cset)
    np.testing.assert_allclose(project_K(once, cset), once, atol=1e-15)
    r = cset.radius[:, None]
    if kind is TVKind.ISO:
        assert np.all(np.linalg.norm(once, axis=-1) <= cset.radius + 1e-12)
    else:
        assert np.all(np.abs(once) <= r + 1e-12)


@pytest.mark.parametrize("kind", [TVKind.ISO, TVKind.ANISO])
def test_project_K_is_nearest_point(kind):
    rng = np.random.default_rng(3)
    cset = ConstraintSet.for_space(SPACE, kind)
    q = 2.0 * rng.standard_normal((3, 2))
    p = project_K(q, cset)
    best = float(np.sum((q - p) ** 2))
    for _ in range(500):
        cand = project_K(p + 0.1 * rng.standard_normal((3, 2)), cset)
        assert float(np.sum((q - cand) ** 2)) >= best - 1e-12


def test_project_K_rejects_wrong_row_count():
    cset = ConstraintSet.for_space(SPACE, TVKind.ISO)
    with pytest.raises(DimensionError):
        project_K(np.zeros((2, 2)), cset)


def test_constraint_set_rejects_non_positive_radii():
    with pytest.raises(ConfigError):
        ConstraintSet(TVKind.ISO, (0.1, 0.0))


def test_scalar_tv_two_by_two_example():
    grid = PixelGrid(2, 2)
    u = np.array([[0.0, 1.0], [0.0, 1.0]])
    assert scalar_tv(u, TVKind.ANISO, grid) == pytest.approx(2.0)
    assert scalar_tv(u, TVKind.ISO, grid) == pytest.approx(2.0)


@pytest.mark.parametrize("half_side, height", [(3, 0.5), (5, 0.2)])
def test_scalar_tv_of_square_is_perimeter_times_height(half_side, height):
    grid = PixelGrid(20, 20)
    u = np.zeros(grid.shape)
    u[10 - half_side : 10 + half_side, 10 - half_side : 10 + half_side] = height
    actual = scalar_tv(u, TVKind.ANISO, grid)
    assert actual == pytest.approx(4 * 2 * half_side * height)


def test_lifted_tv_of_constant_field_is_zero():
    grid = PixelGrid(4, 5)
    u = lift_field(SPACE, np.full(grid.shape, 0.37))
    assert lifted_tv(u, ConstraintSet.for_space(SPACE, TVKind.ISO), grid) == 0.0


def test_lifted_tv_matches_scalar_tv_on_integral_fields():
    rng = np.random.default_rng(4)
    grid = PixelGrid(6, 7)
    t = rng.uniform(SPACE.gamma_min, SPACE.gamma_max, grid.shape)
    u = lift_field(SPACE, t)
    actual = lifted_tv(u, ConstraintSet.for_space(SPACE, TVKind.ANISO), grid)
    assert actual == pytest.approx(scalar_tv(t, TVKind.ANISO, grid), rel=1e-12)


def test_lifted_tv_iso_matches_scalar_tv_within_one_interval():
    rng = np.random.default_rng(5)
    grid = PixelGrid(5, 5)
    t = rng.uniform(0.55, 0.95, grid.shape)
    u = lift_field(SPACE, t)
    actual = lifted_tv(u, ConstraintSet.for_space(SPACE, TVKind.ISO), grid)
    assert actual == pytest.approx(scalar_tv(t, TVKind.ISO, grid), rel=1e-12)


def test_lifted_tv_is_dual_of_constraint_set():
    rng = np.random.default_rng(6)
    grid = PixelGrid(4, 4)
    cset = ConstraintSet.for_space(SPACE, TVKind.ISO)
    u = rng.random((4, 4, 3))
    tv = lifted_tv(u, cset, grid)
    for _ in range(50):
        q = project_K(rng.standard_normal((4, 4, 3, 2)), cset)
        assert float(np.sum(q * grad(u, grid))) <= tv + 1e-12


@pytest.mark.parametrize("kind", [TVKind.ISO, TVKind.ANISO])
def test_project_unit(kind):
    p = np.array([[[3.0, 4.0], [0.2, -0.1]]])
    actual = project_unit(p, kind)
    if kind is TVKind.ISO:
        np.testing.assert_allclose(actual, [[[0.6, 0.8], [0.2, -0.1]]])
    else:
        np.testing.assert_allclose(actual, [[[1.0, 1.0], [0.2, -0.1]]])


def test_scalar_tv_is_documented():
    actual = scalar_tv.__doc__
    assert actual is not None and "Args:" in actual
