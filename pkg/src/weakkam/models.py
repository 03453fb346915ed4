"""Lagrangian models on the torus and the numerical Legendre transform.

Two builtin families cover the experiments:

  * mechanical  L(x,v) = |v|^2/2 - V(x), with conjugate H(x,p) = |p|^2/2 + V(x)
  * drift (Mane) L_X(x,v) = |v - X(x)|^2/2 for a vector field X, with
    H_X(x,p) = |p|^2/2 + p . X(x); constants solve the critical equation
    and the critical value is 0.

"kinetic" is mechanical with V = 0. The Legendre transform is also
available as a brute-force v-grid search (HamiltonianProbe) so analytic
conjugates can be cross-checked.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .grid import GridTorus

Array = np.ndarray


@dataclass
class VectorField:
    """Vector field on the torus. eval maps (k, dim) points to (k, dim) vectors."""

    name: str
    dim: int
    eval: Callable[[Array], Array]
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> Array:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.asarray(self.eval(x), dtype=float)
        return out.reshape(x.shape)

    def max_norm_on(self, grid: GridTorus) -> float:
        values = self(grid.coords())
        m = float(np.max(np.linalg.norm(values, axis=1)))
        if not np.isfinite(m):
            raise ConfigError(f"vector field {self.name!r} is unbounded on the grid")
        return m


@dataclass
class Lagrangian:
    """Lagrangian L(x, v) with optional closed-form conjugate Hamiltonian.

    eval is vectorized: x and v have shape (k, dim) and the result (k,).
    """

    name: str
    dim: int
    eval: Callable[[Array, Array], Array]
    params: dict = field(default_factory=dict)
    analytic_hamiltonian: Optional[Callable[[Array, Array], Array]] = None

    def __call__(self, x, v) -> Array:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        x, v = np.broadcast_arrays(x, v)
        out = np.asarray(self.eval(x, v), dtype=float)
        return out.reshape(x.shape[:-1])


@dataclass(frozen=True)
class HamiltonianProbe:
    """Brute-force Legendre transform settings: v-grid radius and resolution."""

    radius: float = 4.0
    samples_per_axis: int = 129

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError("probe radius must be positive")
        if self.samples_per_axis < 3:
            raise ConfigError("probe needs at least 3 samples per axis")

    def velocity_grid(self, dim: int) -> Array:
        axis = np.linspace(-self.radius, self.radius, self.samples_per_axis)
        if dim == 1:
            return axis[:, None]
        mesh = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def legendre_hamiltonian(L: Lagrangian, x, p, probe: HamiltonianProbe = None) -> Array:
    """H(x,p) = max_v [ p.v - L(x,v) ] over the probe's velocity grid.

    Uses the analytic conjugate when the model carries one; otherwise a
    dense v search. x and p may be single points or (k, dim) batches.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p = np.atleast_2d(np.asarray(p, dtype=float))
    x, p = np.broadcast_arrays(x, p)
    if L.analytic_hamiltonian is not None:
        out = np.asarray(L.analytic_hamiltonian(x, p), dtype=float)
        return out if out.size > 1 else float(out.reshape(-1)[0])
    probe = probe or HamiltonianProbe()
    vgrid = probe.velocity_grid(L.dim)  # (m, dim)
    # values[k, i] = p_k . v_i - L(x_k, v_i)
    k, m = x.shape[0], vgrid.shape[0]
    xs = np.repeat(x, m, axis=0)
    vs = np.tile(vgrid, (k, 1))
    lvals = L(xs, vs).reshape(k, m)
    pv = p @ vgrid.T
    out = np.max(pv - lvals, axis=1)
    return out if out.size > 1 else float(out[0])


def tilde_h(L: Lagrangian, x) -> Array:
    """Fiberwise minimum of H over p, which equals -L(x, 0).

    For Tonelli Lagrangians inf_p H(x,p) is attained at the momentum of
    the zero velocity and evaluates to -L(x,0); the stationary part of
    the Aubry set is where this minimum reaches the critical value.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = -L(x, np.zeros_like(x))
    return out if out.size > 1 else float(out.reshape(-1)[0])


def check_tonelli(L: Lagrangian, grid: GridTorus, probe: HamiltonianProbe = None) -> dict:
    """Sampled sanity report for the Tonelli conditions.

    Checks second differences in v (convexity), growth of L/|v| at the
    probe boundary (superlinearity proxy), and finiteness on a coarse
    (x, v) stencil. Report only; nothing is enforced.
    """
    probe = probe or HamiltonianProbe()
    stride = max(1, grid.n_per_axis // 16)
    chosen = np.arange(0, grid.point_count, stride**grid.dim)
    xs = grid.coords(chosen)

    report = {"convex": True, "superlinear": True, "finite": True,
              "worst_second_difference": np.inf, "samples": int(xs.shape[0])}
    h = 0.25
    speeds = np.linspace(-probe.radius, probe.radius, 33)
    for axis in range(grid.dim):
        e = np.zeros(grid.dim)
        e[axis] = 1.0
        for s in speeds:
            v0 = s * e
            lm = L(xs, v0 - h * e)
            l0 = L(xs, v0)
            lp = L(xs, v0 + h * e)
            if not (np.all(np.isfinite(lm)) and np.all(np.isfinite(l0)) and np.all(np.isfinite(lp))):
                report["finite"] = False
                continue
            second = np.min(lm + lp - 2.0 * l0)
            report["worst_second_difference"] = min(report["worst_second_difference"], float(second))
            # zero counts as a violation: affine rays break strict convexity
            if second <= 0.0:
                report["convex"] = False
        # superlinearity proxy: L(x, r e)/r should exceed L(x, (r/2) e)/(r/2)
        r = probe.radius
        big = L(xs, r * e) / r
        mid = L(xs, (r / 2) * e) / (r / 2)
        if not np.all(big >= mid - 1e-9):
            report["superlinear"] = False
    return report


# ---------------------------------------------------------------------------
# builtin factories


def zero_field(dim: int) -> VectorField:
    return VectorField("zero", dim, lambda x: np.zeros_like(x))


def constant_field(components, dim: int) -> VectorField:
    c = np.asarray(components, dtype=float).reshape(-1)
    if c.shape[0] != dim:
        raise ConfigError(f"constant field needs {dim} components, got {c.shape[0]}")

    return VectorField("constant", dim, lambda x: np.broadcast_to(c, x.shape).copy(),
                       params={"components": c.tolist()})


def sin_gradient_field(dim: int, k: int = 1) -> VectorField:
    """X_i(x) = sin(2 pi k x_i) per axis; zeros at multiples of 1/(2k)."""
    kk = float(k)

    return VectorField("sin_gradient", dim, lambda x: np.sin(2.0 * np.pi * kk * x),
                       params={"k": k})


@dataclass
class Potential:
    """Scalar potential with gradient, used by mechanical and neg_grad models."""

    name: str
    dim: int
    eval: Callable[[Array], Array]
    grad: Callable[[Array], Array]
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> Array:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.eval(x), dtype=float).reshape(x.shape[0])


def cosine_potential(dim: int, k, amp: float = 1.0) -> Potential:
    """V(x) = amp * cos(2 pi k . x) for an integer wave vector k."""
    kvec = np.asarray(k, dtype=float).reshape(-1)
    if kvec.shape[0] != dim:
        raise ConfigError(f"cosine potential needs a {dim}-vector k, got {kvec.shape[0]}")

    def ev(x):
        return amp * np.cos(2.0 * np.pi * (x @ kvec))

    def gr(x):
        s = -amp * 2.0 * np.pi * np.sin(2.0 * np.pi * (x @ kvec))
        return s[:, None] * kvec[None, :]

    return Potential("cosine", dim, ev, gr, params={"k": kvec.tolist(), "amp": amp})


def make_potential(spec: dict, dim: int) -> Potential:
    name = spec.get("name", "cosine")
    if name == "cosine":
        return cosine_potential(dim, spec.get("k", [1] * dim), float(spec.get("amp", 1.0)))
    if name == "zero":
        zero = cosine_potential(dim, [0] * dim, 0.0)
        zero.name = "zero"
        return zero
    raise ConfigError(f"unknown potential {name!r}")


def neg_grad_field(potential: Potential) -> VectorField:
    return VectorField("neg_grad", potential.dim, lambda x: -potential.grad(np.atleast_2d(x)),
                       params={"potential": potential.name, **potential.params})


def table_field(grid: GridTorus, table: Array) -> VectorField:
    """Vector field sampled per grid cell; evaluation snaps to the nearest cell."""
    table = np.asarray(table, dtype=float)
    if table.shape != (grid.point_count, grid.dim):
        raise ConfigError(
            f"field table has shape {table.shape}, expected ({grid.point_count}, {grid.dim})"
        )
    if not np.all(np.isfinite(table)):
        raise ConfigError("field table contains non-finite entries")

    def ev(x):
        return table[grid.nearest_index(np.atleast_2d(x))]

    return VectorField("table", grid.dim, ev, params={"cells": grid.point_count})


def make_vector_field(spec: dict, grid: GridTorus) -> VectorField:
    name = spec.get("name")
    if name == "zero":
        return zero_field(grid.dim)
    if name == "constant":
        return constant_field(spec.get("components", [1.0] * grid.dim), grid.dim)
    if name == "sin_gradient":
        return sin_gradient_field(grid.dim, int(spec.get("k", 1)))
    if name == "neg_grad":
        return neg_grad_field(make_potential(spec.get("potential", {}), grid.dim))
    if name == "table":
        path = spec.get("path")
        if path is None:
            raise ConfigError("table field needs a 'path' to a CSV of cell samples")
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return table_field(grid, raw[:, -grid.dim:])
    raise ConfigError(
        f"unknown vector field {name!r}; builtins are 'zero', 'constant', "
        "'sin_gradient', 'neg_grad', 'table'")


def mane_lagrangian(X: VectorField) -> Lagrangian:
    """Drift Lagrangian |v - X(x)|^2 / 2 with its closed-form conjugate."""

    def ev(x, v):
        d = v - X(x)
        return 0.5 * np.sum(d * d, axis=-1)

    def ham(x, p):
        return 0.5 * np.sum(p * p, axis=-1) + np.sum(p * X(x), axis=-1)

    return Lagrangian(f"mane[{X.name}]", X.dim, ev,
                      params={"field": X.name, **X.params},
                      analytic_hamiltonian=ham)


def mechanical_lagrangian(V: Potential) -> Lagrangian:
    """L = |v|^2/2 - V(x), H = |p|^2/2 + V(x)."""

    def ev(x, v):
        return 0.5 * np.sum(v * v, axis=-1) - V(x)

    def ham(x, p):
        return 0.5 * np.sum(p * p, axis=-1) + V(x)

    return Lagrangian(f"mechanical[{V.name}]", V.dim, ev,
                      params={"potential": V.name, **V.params},
                      analytic_hamiltonian=ham)


def kinetic_lagrangian(dim: int) -> Lagrangian:
    L = mechanical_lagrangian(make_potential({"name": "zero"}, dim))
    L.name = "kinetic"
    return L


def make_lagrangian(model: dict, grid: GridTorus) -> Lagrangian:
    family = model.get("family")
    if family == "mane":
        return mane_lagrangian(make_vector_field(model.get("field", {}), grid))
    if family == "mechanical":
        return mechanical_lagrangian(make_potential(model.get("potential", {}), grid.dim))
    if family == "kinetic":
        return kinetic_lagrangian(grid.dim)
    raise ConfigError(
        f"unknown model family {family!r}; builtins are 'kinetic', 'mane', 'mechanical'")
