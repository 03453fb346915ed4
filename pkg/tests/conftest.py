"""Shared kernel builders. Session-scoped: closures are the slow part."""

import numpy as np
import pytest

from weakkam import (
    ActionKernel,
    build_grid,
    build_kernel,
    cosine_potential,
    critical_value,
    kinetic_lagrangian,
    mane_lagrangian,
    mechanical_lagrangian,
    peierls_barrier,
    zero_field,
)


def toy_kernel(cost, tau=1.0):
    """Dense cost[y][x] matrix on a tiny T1 grid as an ActionKernel.

    Row y, column x holds the cost of the edge y -> x. Only works when
    every offset is used, i.e. cost has no infinite ring.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    grid = build_grid(1, n)
    offsets = np.arange(n, dtype=np.int64)[:, None]
    weights = np.empty((n, n))
    for s in range(n):
        src = (np.arange(n) - s) % n
        weights[s] = cost[src, np.arange(n)]
    return ActionKernel(grid=grid, tau=tau, stencil_radius=(n // 2) * grid.spacing,
                        offsets=offsets, weights=weights)


@pytest.fixture(scope="session")
def kinetic_kernel_16():
    grid = build_grid(1, 16)
    return build_kernel(grid, kinetic_lagrangian(1))


@pytest.fixture(scope="session")
def pendulum_kernel_64():
    grid = build_grid(1, 64)
    return build_kernel(grid, mechanical_lagrangian(cosine_potential(1, [1])))


@pytest.fixture(scope="session")
def pendulum_state_64(pendulum_kernel_64):
    K = pendulum_kernel_64
    cv = critical_value(K)
    h = peierls_barrier(K, cv.c)
    return {"K": K, "c": cv.c, "h": h}


@pytest.fixture(scope="session")
def doublewell_state_64():
    grid = build_grid(1, 64)
    K = build_kernel(grid, mechanical_lagrangian(cosine_potential(1, [2])))
    cv = critical_value(K)
    h = peierls_barrier(K, cv.c)
    return {"K": K, "c": cv.c, "h": h}


@pytest.fixture(scope="session")
def mane_zero_kernel_16():
    grid = build_grid(1, 16)
    return build_kernel(grid, mane_lagrangian(zero_field(1)))
