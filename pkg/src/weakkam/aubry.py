"""Peierls barrier, projected Aubry set, Mather semi-distance, quotient.

The barrier is assembled from the min-plus closure of the c-shifted
kernel: h(x,y) = min over critical cells a of SP(x,a) + SP(a,y), where
the critical cells are those lying on a zero-mean cycle. Routing every
pair through the flat cycles is what the liminf over long horizons
selects, and it gives exact zeros of h on the critical cells, exact
triangle inequalities, and columns that are genuine fixed points of the
shifted backward operator.
"""

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError
from .kernel import ActionKernel, kernel_closure


@dataclass
class SemiMetric:
    """Dense matrix of pairwise values over an indexed point set.

    point_ids[i] is the flat grid index (or synthetic id) of row/col i.
    """

    point_ids: np.ndarray
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        self.point_ids = np.asarray(self.point_ids, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        k = self.point_ids.shape[0]
        if self.values.shape != (k, k):
            raise ConfigError(
                f"semimetric values shape {self.values.shape} does not match {k} point ids"
            )

    @property
    def size(self) -> int:
        return self.point_ids.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values).copy()

    def positions_of(self, ids) -> np.ndarray:
        """Row positions of the given ids; raises if any id is absent."""
        ids = np.asarray(ids, dtype=np.int64)
        order = np.argsort(self.point_ids, kind="stable")
        pos = np.searchsorted(self.point_ids, ids, sorter=order)
        if np.any(pos >= self.point_ids.size) or np.any(
                self.point_ids[order[np.minimum(pos, self.point_ids.size - 1)]] != ids):
            missing = ids[self.point_ids[order[np.minimum(pos, self.point_ids.size - 1)]] != ids]
            raise ConfigError(f"ids not present in semimetric: {missing[:8].tolist()}")
        return order[pos]

    def restrict(self, positions) -> "SemiMetric":
        positions = np.asarray(positions, dtype=np.int64)
        return SemiMetric(point_ids=self.point_ids[positions],
                          values=self.values[np.ix_(positions, positions)],
                          symmetric=self.symmetric)

    def triangle_violation(self, via_limit: int = 512, seed: int = 0) -> float:
        """max over pairs (x,z) and midpoints y of v[x,z] - v[x,y] - v[y,z].

        Exhaustive in y for small sets; for large ones a deterministic
        random sample of via_limit midpoints is used.
        """
        k = self.size
        if k <= via_limit:
            vias = np.arange(k)
        else:
            vias = np.random.default_rng(seed).choice(k, size=via_limit, replace=False)
        worst = -np.inf
        for y in vias:
            detour = self.values[:, y][:, None] + self.values[y, :][None, :]
            worst = max(worst, float(np.max(self.values - detour)))
        return worst

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.values - self.values.T)))


@dataclass
class AubrySet:
    indices: np.ndarray        # flat grid indices, sorted
    self_barrier: np.ndarray   # h(x,x) per index
    labels: list               # "stationary" | "periodic" | "other" per index
    threshold: float


@dataclass
class QuotientPartition:
    classes: list              # list of sorted lists of Aubry grid indices
    representative: list       # smallest member of each class
    merge_threshold: float

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def reduced_delta(self, delta: SemiMetric) -> np.ndarray:
        """delta between class representatives, in class order."""
        pos = delta.positions_of(np.asarray(self.representative, dtype=np.int64))
        return delta.values[np.ix_(pos, pos)]


def cycle_values(K: ActionKernel, sp_mat: np.ndarray, shift: float) -> np.ndarray:
    """Per-cell best cycle weight on the shifted kernel: min over first
    hops x -> y of cost + SP(y, x)."""
    fwd = K.forward_targets()
    cols = np.arange(K.point_count)
    best = np.full(K.point_count, np.inf)
    for s in range(K.stencil_size):
        tgt = fwd[s]
        np.minimum(best, K.weights[s, tgt] + shift + sp_mat[tgt, cols], out=best)
    return best


def peierls_barrier(K: ActionKernel, c: float, horizon: Optional[int] = None,
                    zero_tol: Optional[float] = None) -> SemiMetric:
    """Long-run minimal cost between all cell pairs at the critical level.

    With the kernel shifted by c*tau the best cycles have weight zero,
    and the liminf of n-step costs is realized by paths routed through
    those cycles: h(x,y) = min over critical cells a of SP(x,a)+SP(a,y).
    """
    shift = c * K.tau
    sp_mat = kernel_closure(K, shift, max_rounds=horizon)
    cyc = cycle_values(K, sp_mat, shift)
    if zero_tol is None:
        scale = float(np.max(np.abs(sp_mat)))
        zero_tol = 1e-10 * max(1.0, scale)
    critical = np.nonzero(cyc <= zero_tol)[0]
    if critical.size == 0:
        raise NumericalError(
            f"no zero-mean cycle at level c={c}; smallest cycle weight {cyc.min():.3e}. "
            "The supplied c is likely not the critical value of this kernel."
        )
    N = K.point_count
    if critical.size == N:
        h = sp_mat.copy()
    else:
        h = np.full((N, N), np.inf)
        for a in critical:
            np.minimum(h, sp_mat[:, a][:, None] + sp_mat[a, :][None, :], out=h)
    return SemiMetric(point_ids=np.arange(N), values=h, symmetric=False)


def aubry_set(h: SemiMetric, eta: Optional[float], K: ActionKernel, c: float) -> AubrySet:
    """Cells whose self-barrier vanishes up to eta, with orbit labels.

    eta=None picks max(1e-8, 4x the worst negative float residue on the
    diagonal); the barrier construction makes true Aubry diagonals exact
    zeros, so only rounding noise needs absorbing.
    """
    diag = h.diagonal()
    if eta is None:
        eta = max(1e-8, 4.0 * max(0.0, float(-diag.min())))
    sel = np.nonzero(diag <= eta)[0]
    if sel.size == 0:
        raise NumericalError(
            f"empty Aubry set at eta={eta:.3e} (min self-barrier {diag.min():.3e}); "
            "raise eta or refine the grid - the continuous Aubry set is nonempty."
        )
    indices = h.point_ids[sel]
    labels = classify_aubry(K, h, c, indices)
    return AubrySet(indices=indices, self_barrier=diag[sel], labels=labels,
                    threshold=float(eta))


def _successors(K: ActionKernel, h: SemiMetric, c: float, tie_tol: float):
    """Minimizing one-step successor of every cell along zero-mean cycles.

    Returns (succ, stationary) arrays; stationary marks cells whose own
    self-loop ties the minimum within tie_tol.
    """
    fwd = K.forward_targets()
    cols = np.arange(K.point_count)
    shift = c * K.tau
    scores = np.empty((K.stencil_size, K.point_count))
    for s in range(K.stencil_size):
        tgt = fwd[s]
        scores[s] = K.weights[s, tgt] + shift + h.values[tgt, cols]
    best = np.min(scores, axis=0)
    s_best = np.argmin(scores, axis=0)
    succ = fwd[s_best, cols]
    stationary = scores[K.zero_offset] <= best + tie_tol
    return succ, stationary


def classify_aubry(K: ActionKernel, h: SemiMetric, c: float, indices,
                   tie_tol: float = 1e-12) -> list:
    """Label Aubry cells stationary / periodic / other.

    stationary: the cell's own self-loop minimizes cost(x,y)+c*tau+h(y,x).
    periodic: following successors returns to the cell through distinct
    cells within point_count steps.
    """
    indices = np.asarray(indices, dtype=np.int64)
    succ, stationary = _successors(K, h, c, tie_tol)
    labels = []
    for x in indices:
        if stationary[x]:
            labels.append("stationary")
            continue
        seen = {int(x)}
        v = int(succ[x])
        label = "other"
        for _ in range(K.point_count):
            if v == x:
                label = "periodic"
                break
            if v in seen or stationary[v]:
                break  # closed onto a different orbit
            seen.add(v)
            v = int(succ[v])
        labels.append(label)
    return labels


def mather_delta(h: SemiMetric) -> SemiMetric:
    """delta(x,y) = h(x,y) + h(y,x)."""
    return SemiMetric(point_ids=h.point_ids.copy(), values=h.values + h.values.T,
                      symmetric=True)


def quotient(delta: SemiMetric, A: AubrySet, merge_threshold: float) -> QuotientPartition:
    """Union-find merge of Aubry indices at delta <= merge_threshold."""
    pos = delta.positions_of(A.indices)
    sub = delta.values[np.ix_(pos, pos)]
    k = pos.size
    if np.all(sub <= merge_threshold):
        members = sorted(int(i) for i in A.indices)
        return QuotientPartition(classes=[members], representative=[members[0]],
                                 merge_threshold=float(merge_threshold))
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    ii, jj = np.nonzero(sub <= merge_threshold)
    for i, j in zip(ii.tolist(), jj.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    groups = {}
    ids = A.indices
    for i in range(k):
        groups.setdefault(find(i), []).append(int(ids[i]))
    classes = sorted((sorted(m) for m in groups.values()), key=lambda m: m[0])
    reps = [m[0] for m in classes]
    return QuotientPartition(classes=classes, representative=reps,
                             merge_threshold=float(merge_threshold))


@dataclass
class RepresentationReport:
    max_residual: float
    worst_pair: tuple
    pairs_checked: int


def representation_check(h: SemiMetric, delta: SemiMetric, A: AubrySet) -> RepresentationReport:
    """Residual of delta(x,y) = (u1-u2)(y) - (u1-u2)(x) over Aubry pairs,
    with u1 = h(x,.) and u2 = h(y,.) the barrier-column solutions."""
    pos = h.positions_of(A.indices)
    H = h.values
    D = delta.values
    px = pos[:, None]
    py = pos[None, :]
    rhs = (H[px, py] - H[py, py]) - (H[px, px] - H[py, px])
    res = np.abs(D[px, py] - rhs)
    flat = int(np.argmax(res))
    i, j = np.unravel_index(flat, res.shape)
    return RepresentationReport(
        max_residual=float(res[i, j]),
        worst_pair=(int(A.indices[i]), int(A.indices[j])),
        pairs_checked=int(res.size),
    )
