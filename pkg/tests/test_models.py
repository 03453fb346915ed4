"""Model layer: Lagrangian families, Legendre transform, field factories."""

import numpy as np
import pytest

from weakkam import (
    ConfigError,
    HamiltonianProbe,
    check_tonelli,
    constant_field,
    cosine_potential,
    build_grid,
    kinetic_lagrangian,
    legendre_hamiltonian,
    make_lagrangian,
    make_potential,
    make_vector_field,
    mane_lagrangian,
    mechanical_lagrangian,
    neg_grad_field,
    sin_gradient_field,
    table_field,
    tilde_h,
    zero_field,
)
from weakkam.models import Lagrangian

X0 = np.array([[0.0]])


def test_legendre_kinetic_at_zero_momentum():
    H = legendre_hamiltonian(kinetic_lagrangian(1), X0, np.array([0.0]))
    assert H == 0.0


def test_legendre_kinetic_unit_momentum():
    H = legendre_hamiltonian(kinetic_lagrangian(1), X0, np.array([1.0]))
    assert H == pytest.approx(0.5, abs=1e-12)


def test_legendre_dense_scan_matches_closed_form():
    # strip the analytic Hamiltonian to force the v-grid search
    kin = kinetic_lagrangian(1)
    bare = Lagrangian(name=kin.name, dim=1, eval=kin.eval, params={},
                      analytic_hamiltonian=None)
    H = legendre_hamiltonian(bare, X0, np.array([1.0]), HamiltonianProbe())
    assert H == pytest.approx(0.5, abs=1e-9)


def test_legendre_mane_constant_field():
    L = mane_lagrangian(constant_field([1.0], 1))
    H = legendre_hamiltonian(L, X0, np.array([1.0]))
    assert H == pytest.approx(1.5)


def test_mane_lagrangian_values():
    L = mane_lagrangian(zero_field(1))
    assert L(np.array([[0.37]]), np.array([1.0]))[0] == pytest.approx(0.5)
    Ls = mane_lagrangian(sin_gradient_field(1))
    assert Ls(np.array([[0.25]]), np.array([0.0]))[0] == pytest.approx(0.5)
    H = legendre_hamiltonian(Ls, np.array([[0.25]]), np.array([1.0]))
    assert H == pytest.approx(1.5)


def test_mane_lagrangian_vanishes_on_the_field():
    X = sin_gradient_field(1)
    L = mane_lagrangian(X)
    g = build_grid(1, 32)
    xs = g.coords()
    assert np.max(np.abs(L(xs, X(xs)))) == 0.0


def test_mechanical_lagrangian_values():
    V = cosine_potential(1, [1])
    L = mechanical_lagrangian(V)
    assert L(X0, np.array([0.0]))[0] == pytest.approx(-1.0)
    kin = mechanical_lagrangian(make_potential({"name": "zero"}, 1))
    assert kin(X0, np.array([1.0]))[0] == pytest.approx(0.5)


def test_tilde_h_values():
    V = cosine_potential(1, [1])
    assert tilde_h(mechanical_lagrangian(V), X0) == pytest.approx(1.0)
    assert tilde_h(mane_lagrangian(zero_field(1)), X0) == 0.0
    X = constant_field([2.0], 1)
    assert tilde_h(mane_lagrangian(X), X0) == pytest.approx(-2.0)


def test_tilde_h_mane_nonpositive():
    L = mane_lagrangian(sin_gradient_field(1))
    g = build_grid(1, 64)
    vals = tilde_h(L, g.coords())
    assert np.all(vals <= 1e-15)
    assert vals[0] == pytest.approx(0.0, abs=1e-15)


def test_tonelli_kinetic_clean():
    rep = check_tonelli(kinetic_lagrangian(1), build_grid(1, 16))
    assert rep["convex"] and rep["superlinear"] and rep["finite"]
    # quadratic L has exact second difference h^2 at h=0.25
    assert rep["worst_second_difference"] == pytest.approx(0.0625, abs=1e-14)


def test_tonelli_flags_norm_lagrangian():
    L = Lagrangian(name="vnorm", dim=1,
                   eval=lambda x, v: np.linalg.norm(np.atleast_2d(v), axis=-1),
                   params={})
    rep = check_tonelli(L, build_grid(1, 16))
    assert rep["worst_second_difference"] == 0.0
    assert not rep["convex"]


def test_tonelli_pendulum_clean():
    L = mechanical_lagrangian(cosine_potential(1, [1]))
    rep = check_tonelli(L, build_grid(1, 16))
    assert rep["convex"] and rep["superlinear"] and rep["finite"]


def test_fenchel_inequality_sampled():
    L = mane_lagrangian(sin_gradient_field(1))
    g = build_grid(1, 8)
    xs = g.coords()
    for p in (-1.5, 0.0, 0.7, 2.0):
        H = legendre_hamiltonian(L, xs, np.array([p]))
        for v in (-2.0, -0.5, 0.0, 1.0, 3.0):
            lhs = p * v
            assert np.all(lhs <= L(xs, np.array([v])) + H + 1e-9)


def test_field_factories():
    g = build_grid(1, 8)
    xs = g.coords()
    assert np.all(zero_field(1)(xs) == 0.0)
    np.testing.assert_allclose(constant_field([1.0], 1)(xs), 1.0)
    np.testing.assert_allclose(sin_gradient_field(1)(xs)[:, 0],
                               np.sin(2 * np.pi * xs[:, 0]), atol=1e-15)
    assert constant_field([3.0, 4.0], 2).max_norm_on(build_grid(2, 4)) == pytest.approx(5.0)


def test_neg_grad_field_of_cosine():
    X = neg_grad_field(cosine_potential(1, [1]))
    out = X(np.array([[0.25]]))
    assert out[0, 0] == pytest.approx(2 * np.pi)


def test_cosine_potential_2d():
    V = cosine_potential(2, [1, 0])
    pts = np.array([[0.0, 0.3], [0.5, 0.9]])
    np.testing.assert_allclose(V(pts), [1.0, -1.0], atol=1e-15)


def test_table_field_snaps_to_nearest_cell():
    g = build_grid(1, 4)
    table = np.array([[1.0], [2.0], [3.0], [4.0]])
    X = table_field(g, table)
    np.testing.assert_allclose(X(np.array([[0.26], [0.74]]))[:, 0], [2.0, 4.0])


def test_make_vector_field_unknown_name_lists_builtins():
    g = build_grid(1, 8)
    with pytest.raises(ConfigError) as e:
        make_vector_field({"name": "whirl"}, g)
    for name in ("zero", "constant", "sin"):
        assert name in str(e.value)


def test_make_lagrangian_families():
    g = build_grid(1, 8)
    kin = make_lagrangian({"family": "kinetic"}, g)
    assert kin(X0, np.array([1.0]))[0] == pytest.approx(0.5)
    mech = make_lagrangian({"family": "mechanical", "potential": {"name": "cosine", "k": [1]}}, g)
    assert mech(X0, np.array([0.0]))[0] == pytest.approx(-1.0)
    mane = make_lagrangian({"family": "mane", "field": {"name": "zero"}}, g)
    assert mane(X0, np.array([0.0]))[0] == 0.0
    with pytest.raises(ConfigError) as e:
        make_lagrangian({"family": "quasilinear"}, g)
    assert "kinetic" in str(e.value)
