"""Covering-number geometry of quotient semi-metrics and the chain
semi-metric delta_p.

The 1-dimensional Hausdorff measure of a finite semi-metric space is
estimated through greedy coverings: N(r) balls of radius r give the
surrogate N(r)*2r. Greedy covering is deterministic under index order,
which the artifact determinism contract relies on.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .grid import GridTorus, wrap_displacement
from .aubry import AubrySet, SemiMetric


@dataclass
class CoveringReport:
    scales: np.ndarray
    covering_counts: np.ndarray
    h1_estimates: np.ndarray   # N(r) * 2r per scale
    dim_slope: float           # least-squares slope of log N vs log(1/r)


def _greedy_centers(values: np.ndarray, r: float) -> list:
    """Greedy ball covering anchored at the first uncovered point.

    The center is the candidate whose ball covers that point and the
    most other uncovered points (ties to the lowest index), so balls
    straddle the frontier instead of trailing it; anchoring at the first
    uncovered point keeps the scan deterministic and the count within
    the usual greedy factor of the optimal covering.
    """
    k = values.shape[0]
    uncovered = np.ones(k, dtype=bool)
    centers = []
    while True:
        left = np.nonzero(uncovered)[0]
        if left.size == 0:
            return centers
        i = int(left[0])
        cands = np.nonzero(values[:, i] <= r)[0]
        gains = (values[cands][:, uncovered] <= r).sum(axis=1)
        q = int(cands[int(np.argmax(gains))])
        centers.append(q)
        uncovered &= values[q] > r


def covering_number(delta: SemiMetric, indices, r: float) -> int:
    """Size of the greedy covering of the given ids by delta-balls of radius r."""
    if r <= 0:
        raise ConfigError(f"covering radius must be positive, got {r}")
    if indices is None:
        sub = delta.values
    else:
        pos = delta.positions_of(indices)
        sub = delta.values[np.ix_(pos, pos)]
    return len(_greedy_centers(sub, r))


def hausdorff1_report(delta: SemiMetric, indices, scale_grid) -> CoveringReport:
    """Covering counts and 1-d measure surrogates across scales.

    No scale masking is applied: callers choose scale grids that avoid
    saturation (r below the resolution of the point set) when the slope
    matters.
    """
    scales = np.asarray(scale_grid, dtype=float)
    if scales.size == 0 or np.any(scales <= 0):
        raise ConfigError("scale_grid must be nonempty positive radii")
    scales = np.sort(scales)[::-1].copy()
    counts = np.array([covering_number(delta, indices, float(r)) for r in scales])
    h1 = counts * 2.0 * scales
    if scales.size >= 2 and counts.max() > counts.min():
        slope = float(np.polyfit(np.log(1.0 / scales), np.log(counts), 1)[0])
    else:
        slope = 0.0
    return CoveringReport(scales=scales, covering_counts=counts,
                          h1_estimates=h1, dim_slope=slope)


@dataclass
class QuadraticBoundReport:
    max_ratio: float
    worst_pair: tuple        # (aubry index, grid index)
    pairs_checked: int
    window: float


def quadratic_bound_check(delta: SemiMetric, A: AubrySet, grid: GridTorus,
                          window: float) -> QuadraticBoundReport:
    """max of delta(x,y)/d(x,y)^2 over Aubry x and grid y with
    2*spacing <= d(x,y) <= window.

    delta must cover the full grid (symmetrized barrier), since the y
    side ranges over non-Aubry cells.
    """
    if window <= 2 * grid.spacing:
        raise ConfigError(
            f"window {window} leaves no pairs above the 2*spacing={2*grid.spacing} cutoff")
    pos = delta.positions_of(A.indices)
    all_pos = delta.positions_of(np.arange(grid.point_count))
    xs = grid.coords(A.indices)
    ys = grid.coords()
    disp = wrap_displacement(xs[:, None, :], ys[None, :, :])
    d = np.linalg.norm(disp, axis=-1)
    mask = (d >= 2 * grid.spacing) & (d <= window)
    if not np.any(mask):
        raise ConfigError("no Aubry/grid pairs inside the window")
    vals = delta.values[np.ix_(pos, all_pos)]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, vals / d**2, -np.inf)
    flat = int(np.argmax(ratio))
    i, j = np.unravel_index(flat, ratio.shape)
    return QuadraticBoundReport(max_ratio=float(ratio[i, j]),
                                worst_pair=(int(A.indices[i]), int(j)),
                                pairs_checked=int(mask.sum()),
                                window=float(window))


def ferry_delta_p(points, p: float, metric: Optional[Callable] = None) -> SemiMetric:
    """Chain semi-metric: infimum over finite chains of sum d(a_{i+1},a_i)^p.

    Computed as all-pairs shortest paths on the complete graph with edge
    weights d^p. For p <= 1 the weights already satisfy the triangle
    inequality and delta_p = d^p; for p > 1 chains through intermediate
    points collapse distances on connected samples.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0]
    if k < 2:
        raise ConfigError("ferry_delta_p needs at least two points")
    if p <= 0:
        raise ConfigError(f"exponent p must be positive, got {p}")
    if metric is None:
        diff = pts[:, None, :] - pts[None, :, :]
        d = np.linalg.norm(diff, axis=-1)
    else:
        d = np.asarray(metric(pts), dtype=float)
        if d.shape != (k, k):
            raise ConfigError(f"metric returned shape {d.shape}, expected ({k},{k})")
    D = d ** p
    np.fill_diagonal(D, 0.0)
    # Floyd-Warshall; dense complete graphs stay small here and scipy's
    # csgraph treats zero entries as missing edges, which is wrong for
    # coincident points.
    for m in range(k):
        np.minimum(D, D[:, m][:, None] + D[m, :][None, :], out=D)
    return SemiMetric(point_ids=np.arange(k), values=D, symmetric=True)


def segment_points(n_intervals: int) -> np.ndarray:
    """n_intervals+1 evenly spaced points on the unit segment in R^1."""
    if n_intervals < 1:
        raise ConfigError("segment needs at least one interval")
    return np.linspace(0.0, 1.0, n_intervals + 1)[:, None]


def circle_points(count: int, radius: float = 1.0) -> np.ndarray:
    """count points evenly spaced on a circle in R^2 (no wrap metric)."""
    if count < 3:
        raise ConfigError("circle sampling needs at least three points")
    th = 2 * np.pi * np.arange(count) / count
    return radius * np.stack([np.cos(th), np.sin(th)], axis=1)


def interval_semimetric(samples: int) -> SemiMetric:
    """Synthetic |s-t| semi-metric on evenly spaced samples of [0,1].

    Control case for the H1 estimator: its 1-d measure is 1 at every
    scale, distinguishing genuine intervals from collapsing quotients.
    """
    if samples < 2:
        raise ConfigError("need at least two samples")
    s = np.linspace(0.0, 1.0, samples)
    return SemiMetric(point_ids=np.arange(samples),
                      values=np.abs(s[:, None] - s[None, :]), symmetric=True)
