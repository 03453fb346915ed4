"""Chain recurrence of torus vector fields and the Aubry-set comparison.

A node's epsilon-chain successors are the grid cells within eps of its
time-dt flow image; chain-recurrent cells are those in a strongly
connected component with at least one edge. Comparing against the
projected Aubry set of the associated quadratic-penalty Lagrangian is
the toolkit's discrete form of the chain-recurrence equivalence.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import ConfigError
from .grid import GridTorus, wrap_displacement
from .models import VectorField


@dataclass
class ChainGraph:
    grid: GridTorus
    dt: float
    eps: float
    edges: sparse.csr_matrix  # adjacency over flat cell indices

    def out_degree(self) -> np.ndarray:
        return np.asarray(self.edges.sum(axis=1)).ravel()


@dataclass
class SetComparison:
    hausdorff_distance: float
    a_only: np.ndarray
    b_only: np.ndarray
    a_size: int
    b_size: int


def integrate_flow(X: VectorField, x, dt: float, substeps: int = 4) -> np.ndarray:
    """Classical 4th-order one-step integration of xdot = X(x), wrapped."""
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if substeps < 1:
        raise ConfigError(f"substeps must be >= 1, got {substeps}")
    y = np.atleast_2d(np.asarray(x, dtype=float)).copy()
    h = dt / substeps
    for _ in range(substeps):
        k1 = X(y)
        k2 = X(y + 0.5 * h * k1)
        k3 = X(y + 0.5 * h * k2)
        k4 = X(y + h * k3)
        y = np.mod(y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), 1.0)
    if np.asarray(x).ndim == 1:
        return y[0]
    return y


def chain_graph(X: VectorField, grid: GridTorus, dt: float, eps: float,
                substeps: int = 4) -> ChainGraph:
    """Edges x -> y for every cell y within eps of the flow image of x."""
    half_diag = 0.5 * grid.spacing * np.sqrt(grid.dim)
    if eps < half_diag:
        raise ConfigError(
            f"eps={eps} is below the half-cell diagonal {half_diag:.3e}; "
            "the flow image could fall between cells and leave a node with no edge")
    images = integrate_flow(X, grid.coords(), dt, substeps)
    base = np.rint(images / grid.spacing).astype(np.int64)
    reach = int(np.ceil(eps / grid.spacing)) + 1
    shifts = np.array(list(itertools.product(range(-reach, reach + 1), repeat=grid.dim)),
                      dtype=np.int64)
    rows, cols = [], []
    n = grid.point_count
    for sh in shifts:
        cells = base + sh[None, :]
        tgt = grid.index_of_cell(cells)
        d = grid.torus_distance(images, grid.coords(tgt))
        keep = d <= eps
        rows.append(np.nonzero(keep)[0])
        cols.append(tgt[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.ones(rows.shape[0], dtype=np.int8)
    adj = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    adj.data[:] = 1  # collapse duplicate wrapped candidates
    g = ChainGraph(grid=grid, dt=float(dt), eps=float(eps), edges=adj)
    if np.any(g.out_degree() == 0):
        raise ConfigError("chain graph has a node without successors; enlarge eps")
    return g


def chain_recurrent_set(g: ChainGraph) -> np.ndarray:
    """Sorted cells whose strongly connected component contains an edge."""
    n_comp, labels = connected_components(g.edges, directed=True, connection="strong")
    counts = np.bincount(labels, minlength=n_comp)
    big = counts[labels] >= 2
    self_loop = np.asarray(g.edges.diagonal()).ravel() > 0
    return np.nonzero(big | self_loop)[0]


def compare_aubry_chain(aubry_indices, chain_indices, grid: GridTorus) -> SetComparison:
    """Hausdorff distance in the torus metric plus one-sided leftovers."""
    a = np.asarray(aubry_indices, dtype=np.int64)
    b = np.asarray(chain_indices, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise ConfigError("set comparison requires two nonempty sets")
    xa = grid.coords(a)
    xb = grid.coords(b)
    disp = wrap_displacement(xa[:, None, :], xb[None, :, :])
    d = np.linalg.norm(disp, axis=-1)
    forward = float(np.max(np.min(d, axis=1)))
    backward = float(np.max(np.min(d, axis=0)))
    return SetComparison(hausdorff_distance=max(forward, backward),
                         a_only=np.setdiff1d(a, b), b_only=np.setdiff1d(b, a),
                         a_size=int(a.size), b_size=int(b.size))


@dataclass
class ConstancyReport:
    max_oscillation: float
    pairwise: list  # (i, j, oscillation of u_i - u_j)


def weak_kam_constancy_check(solutions) -> ConstancyReport:
    """Max over pairs of the oscillation of u_i - u_j.

    Near zero exactly when the critical solution is unique up to
    constants, which happens iff the Mather quotient is trivial.
    """
    if len(solutions) < 2:
        raise ConfigError("need at least two solutions to compare")
    vals = [np.asarray(s.u.values, dtype=float) for s in solutions]
    pairs = []
    worst = 0.0
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            diff = vals[i] - vals[j]
            osc = float(diff.max() - diff.min())
            pairs.append((i, j, osc))
            worst = max(worst, osc)
    return ConstancyReport(max_oscillation=worst, pairwise=pairs)


def default_chain_parameters(grid: GridTorus, X: VectorField) -> dict:
    """dt and eps tuned so genuine motion outruns the merge radius.

    eps just above the half-cell diagonal keeps the graph well formed
    while only near-stationary cells self-loop; dt stretches the flow
    image of unit-speed motion across many cells so transient cells do
    not look recurrent.
    """
    eps = 0.75 * grid.spacing
    speed = X.max_norm_on(grid)
    dt = 16.0 * grid.spacing / max(1.0, speed)
    return {"dt": dt, "eps": eps, "substeps": 4}
