"""One-step action kernels and min-plus (tropical) matrix operations.

The kernel discretizes the time-tau action between grid cells:

    cost[y][z] = tau * L(midpoint(y,z), wrap(z - y)/tau)

for cells within the stencil radius, +inf outside (an explicit
unreachable sentinel; min-plus arithmetic saturates through it).
Because reachability depends only on the cell offset, the kernel is
stored by stencil offset: weights[s, z] is the cost of entering cell z
along offset s. Dense matrices are materialized on demand for small
grids and for artifact dumps.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArtifactError, ConfigError, NumericalError
from .grid import GridTorus, wrap_cells
from .models import Lagrangian

DENSE_LIMIT = 4096  # dense matrices allowed up to this many grid points


@dataclass
class ActionKernel:
    """Discrete action costs keyed by stencil offset.

    weights[s, z] = cost of the hop (z - offsets[s]) -> z, so column z of
    the dense matrix is exactly weights[:, z] scattered over sources.
    """

    grid: GridTorus
    tau: float
    stencil_radius: float
    offsets: np.ndarray  # (S, dim) integer cell offsets, minimal image
    weights: np.ndarray  # (S, N) finite costs
    _fwd: np.ndarray = field(default=None, repr=False)

    @property
    def point_count(self) -> int:
        return self.grid.point_count

    @property
    def stencil_size(self) -> int:
        return self.offsets.shape[0]

    def offset_index(self, offset) -> int:
        hit = np.all(self.offsets == np.asarray(offset, dtype=np.int64), axis=1)
        idx = np.nonzero(hit)[0]
        if idx.size == 0:
            raise ConfigError(f"offset {offset} not in stencil")
        return int(idx[0])

    @property
    def zero_offset(self) -> int:
        return self.offset_index((0,) * self.grid.dim)

    def diagonal(self) -> np.ndarray:
        """Self-loop costs tau * L(x, 0) per cell."""
        return self.weights[self.zero_offset].copy()

    def forward_targets(self) -> np.ndarray:
        """fwd[s, y] = flat index of cell y + offsets[s]."""
        if self._fwd is None:
            n = self.grid.n_per_axis
            cells = np.stack(np.unravel_index(np.arange(self.point_count),
                                              self.grid.shape), axis=-1)
            fwd = np.empty((self.stencil_size, self.point_count), dtype=np.int64)
            for s, o in enumerate(self.offsets):
                fwd[s] = np.ravel_multi_index(tuple(((cells + o) % n).T), self.grid.shape)
            self._fwd = fwd
        return self._fwd

    def dense(self, shift: float = 0.0) -> np.ndarray:
        """Dense (N, N) cost matrix with +inf off the stencil."""
        if self.point_count > DENSE_LIMIT:
            raise NumericalError(
                f"dense kernel refused for {self.point_count} points (limit {DENSE_LIMIT})"
            )
        mat = np.full((self.point_count, self.point_count), np.inf)
        fwd = self.forward_targets()
        rows = np.arange(self.point_count)
        for s in range(self.stencil_size):
            tgt = fwd[s]
            mat[rows, tgt] = self.weights[s, tgt] + shift
        return mat

    # -- min-plus primitives, vectorized over the mesh ----------------------

    def _mesh(self, arr: np.ndarray):
        lead = arr.shape[:-1]
        return arr.reshape(lead + self.grid.shape)

    def apply_min(self, u: np.ndarray, shift: float = 0.0) -> np.ndarray:
        """(T- u)(z) = min_y u(y) + cost[y][z] + shift.

        u may be a vector (N,) or a stack (..., N); the operation maps
        over leading axes, which is how all-pairs relaxations run.
        """
        u = np.asarray(u, dtype=float)
        mesh = self._mesh(u)
        axes = tuple(range(mesh.ndim - self.grid.dim, mesh.ndim))
        out = np.full_like(u, np.inf)
        out_mesh = self._mesh(out)
        for s, o in enumerate(self.offsets):
            w = self.weights[s].reshape(self.grid.shape) + shift
            cand = np.roll(mesh, shift=tuple(o), axis=axes) + w
            np.minimum(out_mesh, cand, out=out_mesh)
        return out

    def apply_max(self, u: np.ndarray, shift: float = 0.0) -> np.ndarray:
        """(T+ u)(x) = max_y u(y) - cost[x][y] - shift."""
        u = np.asarray(u, dtype=float)
        mesh = self._mesh(u)
        axes = tuple(range(mesh.ndim - self.grid.dim, mesh.ndim))
        out = np.full_like(u, -np.inf)
        out_mesh = self._mesh(out)
        for s, o in enumerate(self.offsets):
            w = self.weights[s].reshape(self.grid.shape) + shift
            # u(x+o) - cost[x][x+o]; the cost of entering x+o along o is
            # indexed at the target, so roll both back to x.
            cand = np.roll(mesh - w, shift=tuple(-o), axis=axes)
            np.maximum(out_mesh, cand, out=out_mesh)
        return out


def stencil_offsets(grid: GridTorus, stencil_radius: float) -> np.ndarray:
    """Integer cell offsets with Euclidean reach <= stencil_radius."""
    sp = grid.spacing
    max_cells = int(np.floor(stencil_radius / sp + 1e-9))
    if max_cells < 1:
        raise ConfigError("stencil radius must reach the neighboring cell")
    if 2 * max_cells + 1 > grid.n_per_axis:
        raise ConfigError(
            f"stencil radius {stencil_radius} spans more than the torus period"
        )
    rng = np.arange(-max_cells, max_cells + 1)
    if grid.dim == 1:
        mesh = rng[:, None]
    else:
        a, b = np.meshgrid(rng, rng, indexing="ij")
        mesh = np.stack([a.ravel(), b.ravel()], axis=1)
    keep = np.sum((mesh * sp) ** 2, axis=1) <= stencil_radius**2 + 1e-12
    offsets = mesh[keep]
    order = np.lexsort(tuple(offsets.T[::-1]))
    return offsets[order]


def build_kernel(grid: GridTorus, L: Lagrangian, tau: float = None,
                 stencil_radius: float = None) -> ActionKernel:
    """Evaluate the one-step action on the stencil.

    tau defaults to the grid spacing (unit velocities advance one cell);
    stencil_radius defaults to 4 cells.
    """
    if L.dim != grid.dim:
        raise ConfigError(f"Lagrangian dim {L.dim} != grid dim {grid.dim}")
    sp = grid.spacing
    tau = sp if tau is None else float(tau)
    stencil_radius = 4 * sp if stencil_radius is None else float(stencil_radius)
    if tau <= 0:
        raise ConfigError("tau must be positive")

    offsets = stencil_offsets(grid, stencil_radius)
    coords = grid.coords()
    weights = np.empty((offsets.shape[0], grid.point_count))
    for s, o in enumerate(offsets):
        disp = o * sp
        # midpoint of the hop into z along offset o, wrapped to [0,1)
        mids = np.mod(coords - disp / 2.0, 1.0)
        v = disp / tau
        weights[s] = tau * L(mids, np.broadcast_to(v, mids.shape))
    if not np.all(np.isfinite(weights)):
        bad = np.argwhere(~np.isfinite(weights))
        raise NumericalError(f"kernel has non-finite stencil entries, first at {bad[0]}")
    return ActionKernel(grid=grid, tau=tau, stencil_radius=stencil_radius,
                        offsets=offsets, weights=weights)


def minplus_apply(K: ActionKernel, u: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """Min-plus product of a value vector with the kernel (T- orientation)."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != K.point_count:
        raise ConfigError(f"value vector has {u.shape[-1]} entries, kernel has {K.point_count}")
    return K.apply_min(u, shift)


def minplus_power_min(K: ActionKernel, shift: float = 0.0, n_min: int = 1,
                      n_max: int = None, exit_tol: float = 1e-12) -> np.ndarray:
    """Elementwise min of the shifted kernel's min-plus powers n_min..n_max.

    Stops early once two consecutive accumulated snapshots differ by less
    than exit_tol everywhere. Entries never reached stay +inf.
    """
    if n_min < 1:
        raise ConfigError("n_min must be at least 1")
    n_max = 8 * K.grid.n_per_axis if n_max is None else int(n_max)
    if n_max < n_min:
        raise ConfigError("n_max must be >= n_min")
    P = K.dense(shift)
    M = P.copy() if n_min == 1 else np.full_like(P, np.inf)
    for n in range(2, n_max + 1):
        P = K.apply_min(P, shift)
        if n < n_min:
            continue
        before = M.copy()
        np.minimum(M, P, out=M)
        with np.errstate(invalid="ignore"):
            gap = before - M  # inf - inf on never-reached entries
        gap[~np.isfinite(before) & ~np.isfinite(M)] = 0.0
        if n > n_min and np.all(gap < exit_tol):
            break
    return M


def invariant_axes(K: ActionKernel) -> list:
    """Grid axes along which every stencil weight sheet is constant.

    Cost invariance under translation along an axis means all source
    rows on a translate are rolls of the base row, which lets the
    closure run from one source per invariant slab.
    """
    mesh = K.weights.reshape((K.stencil_size,) + K.grid.shape)
    axes = []
    for ax in range(K.grid.dim):
        sheet = mesh.take(indices=[0], axis=1 + ax)
        if np.array_equal(mesh, np.broadcast_to(sheet, mesh.shape)):
            axes.append(ax)
    return axes


def kernel_closure(K: ActionKernel, shift: float = 0.0, exit_tol: float = 1e-13,
                   max_rounds: int = None) -> np.ndarray:
    """All-pairs min-plus closure (shortest paths, zero-length paths allowed).

    Requires the shifted kernel to carry no substantially negative cycle;
    float residue around an exactly-zero mean cycle is tolerated. Runs
    Bellman-Ford rounds on all sources at once, reduced to one source
    per translation-invariant slab when the weights allow it.
    """
    N = K.point_count
    if max_rounds is None:
        max_rounds = N + 1
    inv = invariant_axes(K)
    mesh_idx = np.arange(N).reshape(K.grid.shape)
    sel = [slice(None)] * K.grid.dim
    for ax in inv:
        sel[ax] = slice(0, 1)
    slab = mesh_idx[tuple(sel)].ravel()

    D = np.full((slab.size, N), np.inf)
    D[np.arange(slab.size), slab] = 0.0
    for _ in range(max_rounds):
        nxt = np.minimum(D, K.apply_min(D, shift))
        with np.errstate(invalid="ignore"):
            gap = D - nxt  # inf - inf on not-yet-reached entries
        gap[~np.isfinite(D) & ~np.isfinite(nxt)] = 0.0
        D = nxt
        if np.all(gap <= exit_tol):
            break
    else:
        probe = np.minimum(D, K.apply_min(D, shift))
        drop = np.nanmax(np.where(np.isfinite(D), D - probe, 0.0))
        if drop > 1e-9:
            raise NumericalError(
                f"shifted kernel has a negative cycle (still improving by {drop:.3e})"
            )
    if not np.all(np.isfinite(D)):
        stranded = np.unique(np.argwhere(~np.isfinite(D))[:, 1])[:8]
        raise NumericalError(f"kernel graph is not strongly connected, e.g. cells {stranded.tolist()}")
    if not inv:
        return D

    row_of = np.empty(N, dtype=np.int64)
    row_of[slab] = np.arange(slab.size)
    cells = np.stack(np.unravel_index(np.arange(N), K.grid.shape), axis=-1)
    proj = cells.copy()
    proj[:, inv] = 0
    pflat = np.ravel_multi_index(tuple(proj.T), K.grid.shape)
    full = np.empty((N, N))
    for y in range(N):
        base = D[row_of[pflat[y]]].reshape(K.grid.shape)
        t = cells[y][inv]
        full[y] = np.roll(base, shift=tuple(t), axis=tuple(inv)).ravel()
    return full


# -- artifacts ---------------------------------------------------------------

FLOAT_FMT = "%.11e"  # 12 significant digits


def dump_kernel(K: ActionKernel, csv_path, json_path=None) -> None:
    """Write finite entries as CSV rows i,j,cost plus a JSON sidecar."""
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
    fwd = K.forward_targets()
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "cost"])
            rows = []
            for s in range(K.stencil_size):
                tgt = fwd[s]
                src = np.arange(K.point_count)
                vals = K.weights[s, tgt]
                rows.extend(zip(src.tolist(), tgt.tolist(), vals.tolist()))
            rows.sort()
            for i, j, v in rows:
                writer.writerow([i, j, FLOAT_FMT % v])
        with open(json_path, "w") as fh:
            json.dump({"dim": K.grid.dim, "n_per_axis": K.grid.n_per_axis,
                       "tau": K.tau, "stencil_radius": K.stencil_radius}, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise ArtifactError(f"cannot write kernel artifact: {exc}") from exc


def load_kernel(csv_path, json_path=None) -> ActionKernel:
    """Rebuild a kernel from its CSV dump and JSON sidecar."""
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
    try:
        with open(json_path) as fh:
            meta = json.load(fh)
        grid = GridTorus(dim=int(meta["dim"]), n_per_axis=int(meta["n_per_axis"]))
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, KeyError, ValueError) as exc:
        raise ArtifactError(f"cannot load kernel artifact: {exc}") from exc
    offsets = stencil_offsets(grid, float(meta["stencil_radius"]))
    K = ActionKernel(grid=grid, tau=float(meta["tau"]),
                     stencil_radius=float(meta["stencil_radius"]),
                     offsets=offsets,
                     weights=np.full((offsets.shape[0], grid.point_count), np.inf))
    src = data[:, 0].astype(np.int64)
    tgt = data[:, 1].astype(np.int64)
    cells_src = np.stack(np.unravel_index(src, grid.shape), axis=-1)
    cells_tgt = np.stack(np.unravel_index(tgt, grid.shape), axis=-1)
    offs = wrap_cells(cells_tgt - cells_src, grid.n_per_axis)
    lookup = {tuple(o): s for s, o in enumerate(offsets.tolist())}
    for k in range(data.shape[0]):
        s = lookup.get(tuple(offs[k].tolist()))
        if s is None:
            raise ArtifactError(f"entry {src[k]}->{tgt[k]} lies outside the declared stencil")
        K.weights[s, tgt[k]] = data[k, 2]
    if not np.all(np.isfinite(K.weights)):
        raise ArtifactError("kernel dump is missing stencil entries")
    return K
