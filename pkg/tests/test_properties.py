"""Property-based checks for the wrapping, min-plus and metric layers."""

import numpy as np
from hypothesis import given, settings, strategies as st

from weakkam import (
    build_grid,
    build_kernel,
    chain_graph,
    chain_recurrent_set,
    check_dominated,
    cosine_potential,
    critical_value,
    ferry_delta_p,
    kinetic_lagrangian,
    lax_oleinik_minus,
    lax_oleinik_plus,
    mechanical_lagrangian,
    minplus_apply,
    sin_gradient_field,
    weak_kam_solution,
    wrap_cells,
    wrap_displacement,
)

unit_floats = st.floats(min_value=0.0, max_value=1.0, exclude_max=True)


@given(st.lists(unit_floats, min_size=1, max_size=8),
       st.lists(unit_floats, min_size=1, max_size=8))
def test_wrap_displacement_is_min_image(xs, ys):
    k = min(len(xs), len(ys))
    x = np.array(xs[:k])[:, None]
    y = np.array(ys[:k])[:, None]
    d = wrap_displacement(x, y)
    assert np.all(d >= -0.5) and np.all(d < 0.5)
    gap = np.abs((x + d) % 1.0 - y % 1.0)
    assert np.all(np.minimum(gap, 1.0 - gap) <= 1e-12)


@given(st.integers(min_value=2, max_value=64),
       st.lists(st.integers(min_value=-200, max_value=200), min_size=1, max_size=16))
def test_wrap_cells_congruent(n, offs):
    arr = np.array(offs)[:, None]
    w = wrap_cells(arr, n)
    assert np.all(w >= -(n // 2)) and np.all(w < (n + 1) // 2)
    assert np.all((w - arr) % n == 0)


_kernel16 = None


def kernel16():
    global _kernel16
    if _kernel16 is None:
        _kernel16 = build_kernel(build_grid(1, 16), kinetic_lagrangian(1))
    return _kernel16


vec16 = st.lists(st.floats(min_value=-10, max_value=10), min_size=16, max_size=16)


@settings(max_examples=40, deadline=None)
@given(vec16, vec16)
def test_minplus_monotone(us, vs):
    u = np.array(us)
    v = np.maximum(u, np.array(vs))
    K = kernel16()
    assert np.all(minplus_apply(K, u) <= minplus_apply(K, v) + 1e-12)


@settings(max_examples=40, deadline=None)
@given(vec16, st.floats(min_value=-5, max_value=5))
def test_minplus_commutes_with_constants(us, a):
    u = np.array(us)
    K = kernel16()
    lhs = minplus_apply(K, u + a)
    rhs = minplus_apply(K, u) + a
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(vec16)
def test_backward_forward_galois(us):
    # T+ and T- are adjoint: T+(T- u) <= u and T-(T+ u) >= u
    u = np.array(us)
    K = kernel16()
    assert np.all(lax_oleinik_plus(K, lax_oleinik_minus(K, u)) <= u + 1e-12)
    assert np.all(lax_oleinik_minus(K, lax_oleinik_plus(K, u)) >= u - 1e-12)


_pend = None


def pendulum64():
    global _pend
    if _pend is None:
        K = build_kernel(build_grid(1, 64),
                         mechanical_lagrangian(cosine_potential(1, [1])))
        _pend = (K, critical_value(K).c)
    return _pend


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.integers(min_value=1, max_value=6))
def test_shifted_steps_preserve_domination(seed, steps):
    K, c = pendulum64()
    rng = np.random.default_rng(seed)
    u = weak_kam_solution(K, c, u0=rng.uniform(0, 1, 64)).u.values
    assert check_dominated(K, u, c, tol=1e-9).dominated
    shift = c * K.tau
    for _ in range(steps):
        u = lax_oleinik_minus(K, u, shift)
        assert check_dominated(K, u, c, tol=1e-9).dominated
    for _ in range(steps):
        u = lax_oleinik_plus(K, u, shift)
        assert check_dominated(K, u, c, tol=1e-9).dominated


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1),
       st.integers(min_value=3, max_value=10),
       st.floats(min_value=1.0, max_value=3.0))
def test_ferry_symmetric_and_triangular(seed, k, p):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(k, 2))
    m = ferry_delta_p(pts, p).values
    np.testing.assert_allclose(m, m.T, atol=1e-12)
    worst = np.max(m[:, None, :] - (m[:, :, None] + m[None, :, :]))
    assert worst <= 1e-12
    assert np.all(np.diag(m) == 0.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=0.8, max_value=1.6), st.floats(min_value=1.6, max_value=3.0))
def test_chain_set_monotone_in_eps(a, b):
    g = build_grid(1, 32)
    X = sin_gradient_field(1)
    dt = 16 * g.spacing
    small = set(chain_recurrent_set(chain_graph(X, g, dt=dt, eps=a * g.spacing)))
    large = set(chain_recurrent_set(chain_graph(X, g, dt=dt, eps=b * g.spacing)))
    assert small <= large
