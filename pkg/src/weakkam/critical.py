"""Critical value and weak KAM solutions of the discrete cell problem.

The additive eigenvalue of the min-plus kernel is found through Karp's
minimum mean cycle: c = -mu/tau where mu is the smallest cycle mean of
the one-step costs. Shifting the kernel by c*tau then makes the best
cycles exactly flat, and value iteration on the shifted backward
operator converges (after damping the min-plus eigenspace cycling) to a
fixed point u = T^- u + c*tau.
"""

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

import math

from .errors import ConfigError, NumericalError
from .grid import GridTorus, ValueFunction, wrap_cells
from .kernel import ActionKernel, invariant_axes, kernel_closure, minplus_apply


@dataclass
class CriticalValue:
    c: float
    mean_cycle_weight: float
    witness_cycle: list  # cell indices, cycle closes from last back to first
    tau: float

    def witness_mean(self, K: ActionKernel) -> float:
        """Replay the witness cycle through the kernel and average it."""
        cyc = list(self.witness_cycle)
        total = 0.0
        fwd = K.forward_targets()
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            hit = np.nonzero(fwd[:, a] == b)[0]
            if hit.size == 0:
                raise NumericalError(f"witness edge {a}->{b} is not in the stencil")
            # several offsets can alias onto the same target on tiny grids
            total += float(np.min(K.weights[hit, b]))
        return total / len(cyc)


@dataclass
class WeakKamSolution:
    u: ValueFunction
    c: float
    residual: float
    iterations: int


def as_value_array(u) -> np.ndarray:
    """Accept a ValueFunction or a plain array and return the flat values."""
    if isinstance(u, ValueFunction):
        return u.values
    return np.asarray(u, dtype=float)


def _backward_sources(K: ActionKernel) -> np.ndarray:
    """src[s, z] = flat index of the cell feeding z along offset s."""
    idx = np.arange(K.point_count).reshape(K.grid.shape)
    src = np.empty((K.stencil_size, K.point_count), dtype=np.int64)
    axes = tuple(range(K.grid.dim))
    for s, o in enumerate(K.offsets):
        src[s] = np.roll(idx, shift=tuple(o), axis=axes).ravel()
    return src


def critical_value(K: ActionKernel) -> CriticalValue:
    """Minimum mean cycle of the kernel graph, with a certified witness.

    Plain Karp runs the k-edge walk recursion from a single source (the
    graph is strongly connected by the stencil construction), takes
    mu = min_v max_k (D_N(v) - D_k(v)) / (N - k), and reconstructs a
    cycle by walking predecessors back from the optimizing vertex.
    Translation-invariant axes are projected out first: cycles of the
    full graph and of the offset-reduced graph have the same means, so
    Karp runs on the small quotient and the witness lifts back exactly.
    """
    inv = invariant_axes(K)
    if len(inv) == K.grid.dim:
        mu, witness = _invariant_min_cycle(K)
    elif inv:
        mu, witness = _reduced_karp(K, inv)
    else:
        mu, witness = _karp(K)

    cv = CriticalValue(c=-mu / K.tau, mean_cycle_weight=mu, witness_cycle=witness,
                       tau=K.tau)
    replay = cv.witness_mean(K)
    if abs(replay - mu) > 1e-9 * max(1.0, abs(mu)):
        cv.witness_cycle = _closure_witness(K, mu)
        replay = cv.witness_mean(K)
        if abs(replay - mu) > 1e-9 * max(1.0, abs(mu)):
            raise NumericalError(
                f"failed to certify a minimum mean cycle: mu={mu}, witness mean={replay}"
            )
    return cv


def _karp(K: ActionKernel):
    N = K.point_count
    src = _backward_sources(K)
    W = K.weights
    D = np.full((N + 1, N), np.inf)
    pred = np.zeros((N + 1, N), dtype=np.int32)
    # virtual-source form: a single start vertex misses cycles it cannot
    # reach when the stencil offsets share a factor with the grid size
    D[0] = 0.0
    cols = np.arange(N)
    for k in range(N):
        cand = D[k][src] + W  # (S, N)
        s_best = np.argmin(cand, axis=0)
        D[k + 1] = cand[s_best, cols]
        pred[k + 1] = src[s_best, cols]

    finite_N = np.isfinite(D[N])
    if not np.any(finite_N):
        raise NumericalError("no walks of full length; kernel graph is degenerate")
    ks = np.arange(N)
    with np.errstate(invalid="ignore"):
        ratios = (D[N][None, :] - D[:N, :]) / (N - ks)[:, None]
    ratios = np.where(np.isfinite(D[:N, :]) & finite_N[None, :], ratios, -np.inf)
    per_vertex = np.max(ratios, axis=0)
    per_vertex = np.where(finite_N & np.isfinite(per_vertex), per_vertex, np.inf)
    v_star = int(np.argmin(per_vertex))
    mu = float(per_vertex[v_star])
    return mu, _extract_cycle(pred, v_star, N)


def _cycle_repeat(offsets_walked: np.ndarray, n: int) -> int:
    """Times a walk with the given per-axis winding must repeat to close."""
    w = np.sum(offsets_walked, axis=0) % n
    r = 1
    for w_ax in w.tolist():
        r = math.lcm(r, n // math.gcd(n, int(w_ax)))
    return r


def _invariant_min_cycle(K: ActionKernel):
    """Fully translation-invariant kernel: the best single offset, repeated.

    Every edge costs at least min_s w(s), and repeating the best offset
    until its winding cancels mod n achieves that bound exactly.
    """
    n = K.grid.n_per_axis
    w = K.weights[:, 0]
    s_star = int(np.argmin(w))
    mu = float(w[s_star])
    o = K.offsets[s_star]
    r = _cycle_repeat(o[None, :], n)
    cells = (np.arange(r)[:, None] * o[None, :]) % n
    witness = np.ravel_multi_index(tuple(cells.T), K.grid.shape).tolist()
    return mu, witness


def _reduced_karp(K: ActionKernel, inv: list):
    """Karp on the quotient over invariant axes, with an exact lift.

    Quotient vertices are cells of the non-invariant sub-torus; parallel
    offsets collapsing to the same quotient move keep their cheapest
    representative, whose invariant components drive the lift.
    """
    n = K.grid.n_per_axis
    non_inv = [ax for ax in range(K.grid.dim) if ax not in inv]
    red_grid = GridTorus(dim=len(non_inv), n_per_axis=n)

    slab = [slice(None)] * K.grid.dim
    for ax in inv:
        slab[ax] = 0
    sheet = K.weights.reshape((K.stencil_size,) + K.grid.shape)[(slice(None),) + tuple(slab)]
    sheet = sheet.reshape(K.stencil_size, red_grid.point_count)

    red_offsets, group = np.unique(K.offsets[:, non_inv], axis=0, return_inverse=True)
    red_w = np.full((red_offsets.shape[0], red_grid.point_count), np.inf)
    chosen = np.zeros_like(red_w, dtype=np.int64)
    for s in range(K.stencil_size):
        g = group[s]
        better = sheet[s] < red_w[g]
        red_w[g] = np.where(better, sheet[s], red_w[g])
        chosen[g] = np.where(better, s, chosen[g])

    red_K = ActionKernel(grid=red_grid, tau=K.tau, stencil_radius=K.stencil_radius,
                         offsets=red_offsets, weights=red_w)
    mu, red_witness = _karp(red_K)

    # lift: walk the quotient cycle, accumulating invariant coordinates
    m = len(red_witness)
    red_cells = np.stack(np.unravel_index(np.asarray(red_witness), red_grid.shape), axis=-1)
    steps = []
    for i in range(m):
        a, b = red_cells[i], red_cells[(i + 1) % m]
        o_red = wrap_cells((b - a)[None, :], n)[0]
        s_red = red_K.offset_index(o_red)
        b_flat = int(np.ravel_multi_index(tuple(b), red_grid.shape))
        steps.append(K.offsets[chosen[s_red, b_flat]])
    steps = np.asarray(steps)
    r = _cycle_repeat(steps[:, inv], n)

    cell = np.zeros(K.grid.dim, dtype=np.int64)
    cell[non_inv] = red_cells[0]
    witness = []
    for k in range(r * m):
        witness.append(int(np.ravel_multi_index(tuple(cell % n), K.grid.shape)))
        cell = cell + steps[k % m]
    return mu, witness


def _extract_cycle(pred, v_star: int, N: int) -> list:
    """Walk the optimal N-edge walk backwards until a vertex repeats."""
    seen = {}
    v = v_star
    walk = []
    for k in range(N, -1, -1):
        if v in seen:
            start = seen[v]
            cyc = walk[start:]
            cyc.reverse()
            return cyc
        seen[v] = len(walk)
        walk.append(v)
        v = int(pred[k, v])
    # the N-edge walk must contain a repeat, but keep a defensive fallback
    return walk[-1:]


def _closure_witness(K: ActionKernel, mu: float) -> list:
    """Certified zero-mean cycle on the mu-shifted kernel via the closure."""
    sp_mat = kernel_closure(K, shift=-mu)
    fwd = K.forward_targets()
    cols = np.arange(K.point_count)
    hop = K.weights - mu  # hop[s, z] entering z
    cyc_val = np.min(
        np.stack([hop[s, fwd[s]] + sp_mat[fwd[s], cols] for s in range(K.stencil_size)]),
        axis=0)
    v0 = int(np.argmin(cyc_val))
    cycle = [v0]
    v = v0
    for _ in range(K.point_count + 1):
        scores = np.array([hop[s, fwd[s, v]] + sp_mat[fwd[s, v], v0]
                           for s in range(K.stencil_size)])
        s_best = int(np.argmin(scores))
        v = int(fwd[s_best, v])
        if v == v0:
            return cycle
        cycle.append(v)
    raise NumericalError("could not close a witness cycle through the closure")


def lax_oleinik_minus(K: ActionKernel, u: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """One backward step: (T- u)(x) = min_y [ u(y) + cost[y][x] ] + shift."""
    return minplus_apply(K, as_value_array(u), shift)


def lax_oleinik_plus(K: ActionKernel, u: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """One forward step: (T+ u)(x) = max_y [ u(y) - cost[x][y] - shift ]."""
    u = as_value_array(u)
    if u.shape[-1] != K.point_count:
        raise ConfigError(f"value vector has {u.shape[-1]} entries, kernel has {K.point_count}")
    return K.apply_max(u, shift)


@dataclass
class DominationReport:
    max_violation: float
    worst_edge: tuple
    dominated: bool


def check_dominated(K: ActionKernel, u: np.ndarray, c: float, tol: float = 0.0) -> DominationReport:
    """Largest violation of u(z) - u(y) <= cost[y][z] + c*tau over stencil edges."""
    u = as_value_array(u)
    src = _backward_sources(K)
    viol = u[None, :] - u[src] - K.weights - c * K.tau  # (S, N)
    flat = int(np.argmax(viol))
    s, z = np.unravel_index(flat, viol.shape)
    worst = float(viol[s, z])
    return DominationReport(max_violation=worst,
                            worst_edge=(int(src[s, z]), int(z)),
                            dominated=worst <= tol)


def weak_kam_solution(K: ActionKernel, c: float, u0: Optional[np.ndarray] = None,
                      tol: float = 1e-9, max_iter: Optional[int] = None,
                      check_every: int = 8) -> WeakKamSolution:
    """Damped value iteration for u = T- u + c*tau, normalized to min u = 0.

    The undamped iterates eventually cycle on the min-plus eigenspace;
    an elementwise running min over the post-burn-in tail converges to a
    genuine fixed point (min-plus combinations of solutions are
    solutions). If the residual stalls the accumulator is re-seeded from
    the current iterate, which discards transient undershoot.
    """
    N = K.point_count
    shift = c * K.tau
    max_iter = 50 * N if max_iter is None else int(max_iter)
    burn_in = min(N, max_iter // 4)
    z = np.zeros(N) if u0 is None else as_value_array(u0).copy()
    if z.shape != (N,):
        raise ConfigError(f"u0 has shape {z.shape}, expected ({N},)")

    m = None
    best_res = np.inf
    stall = 0
    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        z_next = K.apply_min(z, shift)
        raw = float(np.max(np.abs(z_next - z)))
        z = z_next
        if raw <= tol:  # the undamped iterate converged outright
            m = z
            res = raw
            break
        if it < burn_in:
            continue
        m = z.copy() if m is None else np.minimum(m, z)
        if it % check_every == 0:
            res = float(np.max(np.abs(K.apply_min(m, shift) - m)))
            if res <= tol:
                break
            if res < best_res - tol:
                best_res = res
                stall = 0
            else:
                stall += 1
                if stall * check_every > 2 * N:
                    m = None  # re-seed: the early mins trapped a transient
                    best_res = np.inf
                    stall = 0
    else:
        raise NumericalError(
            f"weak KAM iteration did not reach tol={tol} in {max_iter} sweeps "
            f"(last residual {res:.3e})"
        )
    u = m - np.min(m)
    return WeakKamSolution(u=ValueFunction(K.grid, u), c=c, residual=res, iterations=it)
