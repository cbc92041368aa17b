import numpy as np
import pytest

from sav_bottleneck.utils.numerics import (
    bracketed_roots,
    central_difference,
    relative_gap,
    schedule_cost,
    schedule_cost_cell_average,
)


def test_schedule_cost_is_asymmetric():
    np.testing.assert_allclose(schedule_cost([-10.0, 0.0, 5.0], 0.4, 2.0), [4.0, 0.0, 10.0])


def test_cell_average_across_the_kink():
    # average of 0.4|t| on [-1, 0] is 0.2 and of 2t on [0, 1] is 1
    avg = schedule_cost_cell_average([-1.0, 0.0, -1.0], [0.0, 1.0, 1.0], 0.4, 2.0)
    np.testing.assert_allclose(avg, [0.2, 1.0, 0.6])


def test_bracketed_roots_finds_every_sign_change():
    roots = bracketed_roots(lambda x: (x - 1.0) * (x - 3.0), 0.0, 4.5, samples=101)
    assert roots == pytest.approx([1.0, 3.0])
    vectorized = bracketed_roots(lambda x: np.sin(x), 0.5, 7.0, samples=51, vectorized=True)
    assert vectorized == pytest.approx([np.pi, 2.0 * np.pi])


def test_central_difference_and_relative_gap():
    assert central_difference(lambda x: x**3, 2.0, 1e-4) == pytest.approx(12.0, rel=1e-7)
    assert relative_gap(100.0, 101.0) == pytest.approx(1.0 / 101.0)
    assert relative_gap(0.0, 0.0) == 0.0
