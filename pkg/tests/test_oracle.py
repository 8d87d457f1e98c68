import numpy as np
import pytest

from pyLifting.Capsules.Errors import UsageError
from pyLifting.Oracle.BruteForce import (
    EnvelopeOracle,
    TinyInstance,
    envelope_convexity_violations,
    exhaustive_min,
    monotone_grid,
    prox_oracle,
    tiny_tv,
)
from pyLifting.Oracle.SelfTest import format_report, run_selftest

TENT = EnvelopeOracle([[0.0], [0.5], [1.0]], [0.2, 0.0, 0.2])


def test_envelope_of_tent():
    assert TENT.envelope_value([0.25]) == pytest.approx(0.1)
    assert TENT.envelope_value([0.5]) == pytest.approx(0.0)
    assert TENT.envelope_value([1.2]) == np.inf


def test_envelope_cuts_off_concave_points():
    oracle = EnvelopeOracle([[0.0], [0.5], [1.0]], [0.0, 1.0, 0.0])
    assert oracle.envelope_value([0.5]) == pytest.approx(0.0)


def test_envelope_in_two_dimensions():
    oracle = EnvelopeOracle.from_labels((0.0, 0.5, 1.0), 1, lambda t: t)
    # points (0, 0), (1, 0), (1, 1) with costs 0, 0.5, 1
    assert oracle.envelope_value([1.0, 0.5]) == pytest.approx(0.75)
    assert oracle.envelope_value([0.5, 0.5]) == pytest.approx(0.5)
    assert oracle.envelope_value([0.2, 0.6]) == np.inf


def test_conjugate_is_max_over_points():
    oracle = EnvelopeOracle([[0.0], [0.5], [1.0]], [0.0, 0.25, 1.0])
    assert oracle.conjugate_value([1.0]) == pytest.approx(0.25)
    assert oracle.conjugate_value([-1.0]) == pytest.approx(0.0)


def test_shifted_oracle_subtracts_linear_term():
    shifted = TENT.shifted([0.4])
    assert shifted.envelope_value([0.25]) == pytest.approx(0.1 - 0.1)


def test_oracle_caps():
    with pytest.raises(UsageError):
        EnvelopeOracle(np.zeros((2, 4)), [0.0, 0.0])
    with pytest.raises(UsageError):
        EnvelopeOracle(np.linspace(0, 1, 17)[:, None], np.zeros(17))
    with pytest.raises(UsageError):
        EnvelopeOracle([[0.0], [0.0]], [0.0, 1.0])
    with pytest.raises(UsageError):
        EnvelopeOracle([[0.0], [1.0]], [0.0])
    with pytest.raises(UsageError):
        monotone_grid(3, 0.1)


def test_monotone_grid_is_ordered():
    actual = monotone_grid(2, 0.25)
    assert len(actual) == 15
    assert np.all(actual[:, 0] >= actual[:, 1])


def test_prox_oracle_with_zero_cost_is_box_projection():
    oracle = EnvelopeOracle([[0.0], [1.0]], [0.0, 0.0])
    np.testing.assert_allclose(prox_oracle(oracle, [0.3], 1.0, 1e-3), [0.3])
    np.testing.assert_allclose(prox_oracle(oracle, [1.7], 1.0, 1e-3), [1.0])


def test_tiny_instance_caps():
    with pytest.raises(UsageError):
        TinyInstance((1, 5), (TENT,) * 5, (1.0,))
    with pytest.raises(UsageError):
        TinyInstance((1, 2), (TENT,), (1.0,))
    with pytest.raises(UsageError):
        TinyInstance((1, 1), (TENT,), (0.5, 0.5))


def test_tiny_tv_of_step():
    instance = TinyInstance((1, 2), (TENT, TENT), (1.0,))
    u = np.array([[[[0.0], [0.4]]]])
    assert tiny_tv(instance, u)[0] == pytest.approx(0.4)


def test_exhaustive_min_single_pixel_zero_cost():
    oracle = EnvelopeOracle([[0.0], [1.0]], [0.0, 0.0])
    _, energy = exhaustive_min(TinyInstance((1, 1), (oracle,), (1.0,)), 0.1)
    assert energy == pytest.approx(0.0)


def test_exhaustive_min_of_rof_cell():
    cell = EnvelopeOracle.from_labels((0.0, 1.0), 15, lambda t: 10.0 * (t - 0.6) ** 2)
    u, energy = exhaustive_min(TinyInstance((1, 1), (cell,), (1.0,)), 1e-3)
    assert u.reshape(-1)[0] == pytest.approx(0.6, abs=2e-3)
    assert energy == pytest.approx(0.0, abs=2e-3)


def test_exhaustive_min_couples_pixels_through_tv():
    left = EnvelopeOracle([[0.0], [1.0]], [0.0, 0.3])
    right = EnvelopeOracle([[0.0], [1.0]], [0.3, 0.0])
    u, energy = exhaustive_min(TinyInstance((1, 2), (left, right), (1.0,)), 0.5)
    # a jump costs 1, agreeing costs 0.3
    assert energy == pytest.approx(0.3)
    assert u[0, 0, 0] == u[0, 1, 0]


def test_exhaustive_min_rejects_huge_searches():
    oracle = EnvelopeOracle([[0.0], [1.0]], [0.0, 0.0])
    with pytest.raises(UsageError):
        exhaustive_min(TinyInstance((2, 2), (oracle,) * 4, (1.0,)), 1e-3)


def test_envelope_is_midpoint_convex():
    rng = np.random.default_rng(0)
    for _ in range(10):
        oracle = EnvelopeOracle.from_labels((0.0, 0.4, 1.0), 3, lambda t: float(rng.random()))
        actual = envelope_convexity_violations(oracle, [1.0, 1.0], [rng.random(), 0.0])
        assert max(actual) <= 1e-9


def test_selftest_passes():
    actual = run_selftest()
    assert len(actual) == 6
    assert all(r.passed for r in actual), format_report(actual)


def test_selftest_detects_wrong_radii():
    actual = {r.name: r.passed for r in run_selftest(radius_scale=2.0)}
    assert not actual["dual projections"]
    assert not actual["subgradient transform"]
    assert actual["adjointness"]


def test_format_report_lines():
    actual = format_report(run_selftest(radius_scale=2.0)).splitlines()
    assert len(actual) == 6
    assert any("FAIL" in line for line in actual)
    assert any(line.startswith("adjointness") and "PASS" in line for line in actual)
