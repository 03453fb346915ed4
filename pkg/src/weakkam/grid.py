"""Uniform periodic grids on flat tori T^1 and T^2.

Points live on a uniform lattice with n cells per axis, spacing 1/n,
indexed row-major (axis 0 major). All displacement arithmetic uses the
minimal image convention: each component is wrapped into [-1/2, 1/2),
with ties at exactly half a period resolved toward the negative side.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GridTorus:
    """Uniform periodic grid on [0,1)^dim."""

    dim: int
    n_per_axis: int
    spacing: float = field(init=False)
    point_count: int = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError(f"grid dim must be 1 or 2, got {self.dim}")
        # n=2,3 admit hand-built kernels; stencil construction needs more room
        if self.n_per_axis < 2:
            raise ConfigError(f"n_per_axis must be >= 2, got {self.n_per_axis}")
        object.__setattr__(self, "spacing", 1.0 / self.n_per_axis)
        object.__setattr__(self, "point_count", self.n_per_axis**self.dim)

    @property
    def shape(self):
        return (self.n_per_axis,) * self.dim

    def coords(self, indices=None) -> np.ndarray:
        """Coordinates of grid points, shape (k, dim).

        With no argument returns all point_count coordinates in index order.
        """
        if indices is None:
            indices = np.arange(self.point_count)
        indices = np.asarray(indices, dtype=np.int64)
        cells = np.stack(np.unravel_index(indices, self.shape), axis=-1)
        return cells * self.spacing

    def index_of_cell(self, cells) -> np.ndarray:
        """Row-major flat index of integer cell tuples, wrapping each axis."""
        cells = np.asarray(cells, dtype=np.int64) % self.n_per_axis
        if self.dim == 1:
            return cells.reshape(-1)
        return np.ravel_multi_index(tuple(cells.T), self.shape)

    def nearest_index(self, points) -> np.ndarray:
        """Flat index of the grid cell nearest to each point (ties to lower cell)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        cells = np.rint(points / self.spacing).astype(np.int64)
        return self.index_of_cell(cells)

    def torus_distance(self, x, y) -> np.ndarray:
        """Euclidean distance on the torus between coordinate arrays."""
        d = wrap_displacement(np.asarray(x, float), np.asarray(y, float))
        return np.linalg.norm(np.atleast_2d(d), axis=-1)


def build_grid(dim: int, n_per_axis: int) -> GridTorus:
    """Validated GridTorus constructor."""
    return GridTorus(dim=dim, n_per_axis=n_per_axis)


def wrap_displacement(x, y) -> np.ndarray:
    """Minimal-image displacement y - x, each component in [-1/2, 1/2).

    A component difference of exactly 1/2 wraps to -1/2.
    """
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return np.mod(d + 0.5, 1.0) - 0.5


def wrap_cells(offsets, n: int) -> np.ndarray:
    """Integer minimal-image cell offsets in [-n//2, n//2), ties toward negative.

    Exact integer arithmetic; used when building kernels so that grid
    displacements carry no rounding error.
    """
    offsets = np.asarray(offsets, dtype=np.int64)
    half = n // 2
    return np.mod(offsets + half, n) - half


@dataclass
class ValueFunction:
    """Scalar field sampled on a GridTorus, in flat index order."""

    grid: GridTorus
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.point_count,):
            raise ConfigError(
                f"value array has shape {self.values.shape}, expected "
                f"({self.grid.point_count},)"
            )

    def as_mesh(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def oscillation(self) -> float:
        return float(self.values.max() - self.values.min())
