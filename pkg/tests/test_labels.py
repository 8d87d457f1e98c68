import numpy as np
import pytest

from pyLifting.Capsules.Errors import ConfigError, DimensionError, LabelRangeError
from pyLifting.Labels.Lifting import (
    LabelSpace,
    SublabelCoord,
    coord_of,
    integrality_check,
    integrality_field,
    lift_field,
    lift_scalar,
    project_field,
    project_lifted,
    round_field,
    round_to_integral,
    value_of,
)

THIRDS = LabelSpace((0.0, 1 / 3, 2 / 3, 1.0))
HALVES = LabelSpace((0.0, 0.5, 1.0))


def test_label_space_widths_and_counts():
    actual = LabelSpace((0.0, 0.2, 0.5, 1.0))
    assert actual.L == 4
    assert actual.l == 3
    np.testing.assert_allclose(actual.gamma_tilde, [0.2, 0.3, 0.5])
    assert actual.gamma_tilde.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("labels", [(0.0,), (0.0, 0.0, 1.0), (1.0, 0.5), (0.0, float("nan"))])
def test_label_space_rejects_invalid_labels(labels):
    with pytest.raises(ConfigError):
        LabelSpace(labels)


def test_uniform_label_space():
    actual = LabelSpace.uniform(0.0, 1.0, 4)
    np.testing.assert_allclose(actual.labels, [0.0, 1 / 3, 2 / 3, 1.0])


def test_sublabel_coord_rejects_alpha_outside_unit_interval():
    with pytest.raises(ConfigError):
        SublabelCoord(1, 1.5)


@pytest.mark.parametrize(
    "space, coord, expected",
    [
        (THIRDS, SublabelCoord(2, 0.0), 1 / 3),
        (THIRDS, SublabelCoord(2, 1.0), 2 / 3),
        (HALVES, SublabelCoord(1, 0.5), 0.25),
    ],
)
def test_value_of(space, coord, expected):
    actual = value_of(space, coord)
    assert actual == pytest.approx(expected)


@pytest.mark.parametrize(
    "space, t, expected",
    [
        (HALVES, 0.5, [1.0, 0.0]),
        (HALVES, 0.75, [1.0, 0.5]),
        (THIRDS, 1.0, [1.0, 1.0, 1.0]),
    ],
)
def test_lift_scalar(space, t, expected):
    actual = lift_scalar(space, t)
    np.testing.assert_allclose(actual, expected)


def test_lift_scalar_uses_half_open_intervals():
    assert coord_of(HALVES, 0.5) == SublabelCoord(2, 0.0)
    assert coord_of(HALVES, 1.0) == SublabelCoord(2, 1.0)
    assert coord_of(HALVES, 0.0) == SublabelCoord(1, 0.0)


@pytest.mark.parametrize("t", [-0.1, 1.1, float("nan")])
def test_lift_scalar_out_of_range(t):
    with pytest.raises(LabelRangeError):
        lift_scalar(HALVES, t)


@pytest.mark.parametrize(
    "space, u, expected",
    [
        (THIRDS, [1.0, 0.5, 0.0], 0.5),
        (HALVES, [0.0, 0.0], 0.0),
        (HALVES, [1.0, 1.0], 1.0),
    ],
)
def test_project_lifted(space, u, expected):
    actual = project_lifted(space, u)
    assert actual == pytest.approx(expected)


def test_project_lifted_rejects_wrong_length():
    with pytest.raises(DimensionError):
        project_lifted(HALVES, [1.0, 0.0, 0.0])


def test_integrality_check_examples():
    ok, coord = integrality_check([1.0, 0.3, 0.0], 1e-3)
    assert ok and coord.i == 2 and coord.alpha == pytest.approx(0.3)

    ok, coord = integrality_check([0.6, 0.5, 0.4], 1e-3)
    assert not ok and coord is None

    ok, coord = integrality_check([1.0, 1.0, 1.0], 1e-3)
    assert ok and coord == SublabelCoord(3, 1.0)


def test_integrality_check_tolerates_solver_noise():
    ok, coord = integrality_check([1.0 - 4e-4, 0.3, 5e-4], 1e-3)
    assert ok and coord.i == 2


def test_integrality_check_rejects_non_positive_eps():
    with pytest.raises(ConfigError):
        integrality_check([1.0, 0.0], 0.0)


@pytest.mark.parametrize(
    "u, expected",
    [
        ([1.0, 0.3, 0.0], [1.0, 0.3, 0.0]),
        ([0.6, 0.5, 0.4], [1.0, 0.5, 0.0]),
        ([2.0, 2.0, 2.0], [1.0, 1.0, 1.0]),
    ],
)
def test_round_to_integral(u, expected):
    actual = round_to_integral(THIRDS, u)
    np.testing.assert_allclose(actual, expected, atol=1e-12)


def test_round_trip_on_random_spaces():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        L = int(rng.integers(2, 9))
        space = LabelSpace(tuple(np.cumsum(rng.uniform(0.1, 1.0, L)) - 0.5))
        t = rng.uniform(space.gamma_min, space.gamma_max, 50)
        back = np.array([project_lifted(space, lift_scalar(space, x)) for x in t])
        worst = max(worst, float(np.max(np.abs(back - t)) / (space.gamma_max - space.gamma_min)))
    assert worst <= 1e-12


def test_boundaries_are_continuous():
    for i in range(1, THIRDS.l):
        assert value_of(THIRDS, SublabelCoord(i, 1.0)) == value_of(THIRDS, SublabelCoord(i + 1, 0.0))


def test_project_lifted_is_affine():
    rng = np.random.default_rng(1)
    u, w = rng.random(3), rng.random(3)
    theta = 0.3
    actual = project_lifted(THIRDS, theta * u + (1 - theta) * w)
    expected = theta * project_lifted(THIRDS, u) + (1 - theta) * project_lifted(THIRDS, w)
    assert actual == pytest.approx(expected, abs=1e-12)


def test_round_to_integral_is_idempotent():
    rng = np.random.default_rng(2)
    for _ in range(50):
        once = round_to_integral(THIRDS, rng.uniform(-0.5, 1.5, 3))
        np.testing.assert_allclose(round_to_integral(THIRDS, once), once, atol=1e-12)


def test_field_forms_agree_with_per_vector_forms():
    rng = np.random.default_rng(3)
    t = rng.uniform(0.0, 1.0, (4, 5))
    lifted = lift_field(THIRDS, t)
    for r in range(4):
        for c in range(5):
            np.testing.assert_allclose(lifted[r, c], lift_scalar(THIRDS, t[r, c]), atol=1e-12)
    np.testing.assert_allclose(project_field(THIRDS, lifted), t, atol=1e-14)

    ok, index, alpha = integrality_field(lifted)
    assert ok.all()
    for r in range(4):
        for c in range(5):
            actual = value_of(THIRDS, SublabelCoord(int(index[r, c]), float(alpha[r, c])))
            assert actual == pytest.approx(t[r, c], abs=1e-3 / 3)


def test_round_field_matches_round_to_integral():
    u = np.array([[[0.6, 0.5, 0.4], [2.0, 2.0, 2.0]]])
    actual = round_field(THIRDS, u)
    np.testing.assert_allclose(actual[0, 0], [1.0, 0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(actual[0, 1], [1.0, 1.0, 1.0])


def test_integrality_field_flags_relaxed_pixels():
    u = np.array([[[1.0, 0.3, 0.0], [0.6, 0.5, 0.4]]])
    ok, index, _ = integrality_field(u)
    assert ok.tolist() == [[True, False]]
    assert index[0, 0] == 2


@pytest.mark.parametrize("attribute", ["L", "l", "gamma"])
def test_label_space_properties_are_documented(attribute):
    actual = getattr(LabelSpace, attribute).__doc__
    assert actual is not None and actual.strip()
