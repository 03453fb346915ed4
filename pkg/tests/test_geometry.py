"""Covering numbers, measure estimates, ferry semi-metrics."""

import numpy as np
import pytest

from weakkam import (
    ConfigError,
    aubry_set,
    build_grid,
    circle_points,
    covering_number,
    ferry_delta_p,
    hausdorff1_report,
    interval_semimetric,
    kernel_closure,
    mather_delta,
    peierls_barrier,
    quadratic_bound_check,
    segment_points,
)
from weakkam.aubry import SemiMetric


def metric_from(vals):
    vals = np.asarray(vals, dtype=float)
    return SemiMetric(point_ids=np.arange(vals.shape[0]), values=vals, symmetric=True)


def test_covering_collapsed_set_is_one_ball():
    m = metric_from(np.zeros((5, 5)))
    assert covering_number(m, m.point_ids, 0.5) == 1


def test_covering_two_clusters():
    vals = np.ones((4, 4))
    vals[:2, :2] = 0.0
    vals[2:, 2:] = 0.0
    assert covering_number(metric_from(vals), np.arange(4), 0.5) == 2


def test_covering_line_of_four():
    pts = np.arange(4.0)
    vals = np.abs(pts[:, None] - pts[None, :])
    assert covering_number(metric_from(vals), np.arange(4), 1.0) == 2


def test_covering_rejects_nonpositive_radius():
    m = metric_from(np.zeros((3, 3)))
    with pytest.raises(ConfigError):
        covering_number(m, m.point_ids, 0.0)


def test_h1_two_point_set_scales_linearly():
    vals = np.array([[0.0, 1.0], [1.0, 0.0]])
    rep = hausdorff1_report(metric_from(vals), np.arange(2), [0.1, 0.05])
    np.testing.assert_allclose(rep.covering_counts, [2, 2])
    np.testing.assert_allclose(rep.h1_estimates, [0.4, 0.2])


def test_h1_singleton_tends_to_zero():
    m = metric_from(np.zeros((1, 1)))
    rep = hausdorff1_report(m, m.point_ids, [0.2, 0.1, 0.05])
    np.testing.assert_allclose(rep.covering_counts, 1)
    assert rep.h1_estimates[-1] == pytest.approx(0.1)


def test_h1_interval_control_near_one():
    ctrl = interval_semimetric(256)
    rep = hausdorff1_report(ctrl, ctrl.point_ids, [0.04, 0.02, 0.01])
    assert np.all(np.abs(np.asarray(rep.h1_estimates) - 1.0) <= 0.05)


def test_quadratic_bound_on_exact_square_metric():
    g = build_grid(1, 32)
    xs = g.coords()[:, 0]
    d = np.abs(xs[:, None] - xs[None, :])
    d = np.minimum(d, 1.0 - d)
    m = SemiMetric(point_ids=np.arange(32), values=d**2, symmetric=True)

    class FakeAubry:
        indices = np.arange(32)

    rep = quadratic_bound_check(m, FakeAubry(), g, window=0.2)
    assert rep.max_ratio == pytest.approx(1.0, abs=1e-12)


def test_quadratic_bound_pendulum_like(mane_zero_kernel_16):
    K = mane_zero_kernel_16
    h = peierls_barrier(K, 0.0)
    A = aubry_set(h, None, K, 0.0)
    rep = quadratic_bound_check(mather_delta(h), A, K.grid, window=0.3)
    # kinetic deltas are d^2/tau on neighbor pairs; ratio stays bounded
    assert np.isfinite(rep.max_ratio)
    assert rep.max_ratio <= 2.5 / K.tau


def test_ferry_p1_is_the_metric_itself():
    pts = np.array([[0.0], [0.3], [0.7], [1.0]])
    d = np.abs(pts[:, 0][:, None] - pts[:, 0][None, :])
    m = ferry_delta_p(pts, 1.0)
    np.testing.assert_allclose(m.values, d, atol=1e-12)


@pytest.mark.parametrize("n", [8, 16, 32])
def test_ferry_segment_collapse(n):
    m = ferry_delta_p(segment_points(n), 2.0)
    assert m.values[0, -1] == pytest.approx(1.0 / n, abs=1e-15)


def test_ferry_two_isolated_points():
    m = ferry_delta_p(np.array([[0.0], [1.0]]), 2.0)
    assert m.values[0, 1] == 1.0


def test_ferry_triangle_inequality_random_cloud():
    rng = np.random.default_rng(5)
    pts = rng.uniform(size=(12, 2))
    m = ferry_delta_p(pts, 2.0).values
    worst = np.max(m[:, None, :] - (m[:, :, None] + m[None, :, :]))
    assert worst <= 1e-12
    np.testing.assert_allclose(m, m.T, atol=1e-15)


def test_ferry_circle_ratio_halves():
    a = ferry_delta_p(circle_points(32), 2.0)
    b = ferry_delta_p(circle_points(64), 2.0)
    ia, ib = a.size // 2, b.size // 2
    assert b.values[0, ib] <= 0.6 * a.values[0, ia]


def test_segment_and_circle_points_shapes():
    s = segment_points(8)
    assert s.shape == (9, 1)
    assert s[0, 0] == 0.0 and s[-1, 0] == 1.0
    c = circle_points(16, radius=2.0)
    assert c.shape == (16, 2)
    np.testing.assert_allclose(np.linalg.norm(c, axis=1), 2.0)


def test_interval_semimetric_values():
    m = interval_semimetric(11)
    assert m.size == 11
    assert m.values[0, -1] == pytest.approx(1.0)
    assert m.values[3, 7] == pytest.approx(0.4)
