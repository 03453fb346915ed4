"""Pipeline wiring: config -> staged computations -> CSV/JSON artifacts.

Artifacts are deterministic for a fixed config and seed: floats are
printed at 12 significant digits, row order follows flat grid indices,
and the manifest records a sha256 per emitted file. Wall times live only
in the manifest, never in CSVs.
"""

import hashlib
import json
import os
import time

import numpy as np

from .aubry import aubry_set, mather_delta, peierls_barrier, quotient, representation_check
from .chains import chain_graph, chain_recurrent_set, compare_aubry_chain
from .config import ExperimentConfig
from .critical import critical_value, weak_kam_solution
from .errors import ArtifactError, ConfigError, WeakKamError
from .geometry import ferry_delta_p, hausdorff1_report
from .kernel import FLOAT_FMT
from .regularize import (alternating_smooth, aubry_drift, default_schedule,
                         semiconcavity_constant, semiconvexity_constant,
                         subsolution_residual_field)

STAGE_DEPS = {
    "critical": [],
    "weakkam": ["critical"],
    "barrier": ["critical"],
    "aubry": ["critical", "barrier"],
    "quotient": ["critical", "barrier", "aubry"],
    "dimension": ["critical", "barrier", "aubry", "quotient"],
    "regularize": ["critical", "barrier", "aubry", "weakkam"],
}
STAGE_ORDER = ["critical", "weakkam", "barrier", "aubry", "quotient",
               "dimension", "regularize"]

BARRIER_DUMP_LIMIT = 2048  # full matrix CSV only below this point count


# -- deterministic writers ----------------------------------------------------

def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def write_csv(path, header, rows) -> str:
    try:
        with open(path, "w", newline="\n") as f:
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(",".join(_fmt_cell(v) for v in row) + "\n")
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e
    return path


def _jsonify(obj):
    """12-significant-digit floats, plain types, sorted containers."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if not np.isfinite(v) else float(FLOAT_FMT % v)
    return obj


def write_json(path, obj) -> str:
    try:
        with open(path, "w", newline="\n") as f:
            json.dump(_jsonify(obj), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e
    return path


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _coord_header(dim: int) -> list:
    return [f"x{ax}" for ax in range(dim)]


# -- stage bodies -------------------------------------------------------------

def _ensure(state, cfg: ExperimentConfig):
    if "grid" not in state:
        state["grid"] = cfg.grid()
        state["L"] = cfg.lagrangian(state["grid"])
        state["K"] = cfg.kernel(state["grid"], state["L"])
    return state


def _stage_critical(cfg, state, out, formats):
    _ensure(state, cfg)
    cv = critical_value(state["K"])
    state["cv"] = cv
    files = []
    if "json" in formats:
        files.append(write_json(os.path.join(out, "critical.json"), {
            "c": cv.c, "mean_cycle_weight": cv.mean_cycle_weight,
            "witness_cycle": list(cv.witness_cycle), "tau": cv.tau,
        }))
    return files


def _stage_weakkam(cfg, state, out, formats):
    grid, K = state["grid"], state["K"]
    rng = np.random.default_rng(cfg.seed())
    u0 = rng.standard_normal(grid.point_count)
    sol = weak_kam_solution(K, state["cv"].c, u0=u0, tol=cfg.solver_tol(),
                            max_iter=cfg.max_iter(grid))
    state["sol"] = sol
    files = []
    if "json" in formats:
        files.append(write_json(os.path.join(out, "weakkam.json"), {
            "c": sol.c, "residual": sol.residual, "iterations": sol.iterations,
            "seed": cfg.seed(),
        }))
    if "csv" in formats:
        coords = grid.coords()
        rows = ((i, *coords[i], sol.u.values[i]) for i in range(grid.point_count))
        files.append(write_csv(os.path.join(out, "u.csv"),
                               ["index", *_coord_header(grid.dim), "value"], rows))
    return files


def _stage_barrier(cfg, state, out, formats):
    h = peierls_barrier(state["K"], state["cv"].c, horizon=cfg.horizon())
    state["h"] = h
    files = []
    n = h.size
    if "csv" in formats and n <= BARRIER_DUMP_LIMIT:
        vals = h.values
        rows = ((i, j, vals[i, j]) for i in range(n) for j in range(n))
        files.append(write_csv(os.path.join(out, "barrier.csv"), ["i", "j", "h"], rows))
    elif "csv" in formats:
        state.setdefault("notes", []).append(
            f"barrier.csv skipped: {n}x{n} matrix exceeds dump limit {BARRIER_DUMP_LIMIT}")
    return files


def _stage_aubry(cfg, state, out, formats):
    grid, K = state["grid"], state["K"]
    A = aubry_set(state["h"], cfg.eta(), K, state["cv"].c)
    state["A"] = A
    files = []
    if "csv" in formats:
        coords = grid.coords(A.indices)
        rows = ((int(A.indices[k]), *coords[k], A.self_barrier[k], A.labels[k])
                for k in range(A.indices.size))
        files.append(write_csv(os.path.join(out, "aubry.csv"),
                               ["index", *_coord_header(grid.dim), "self_barrier", "label"],
                               rows))
    return files


def _stage_quotient(cfg, state, out, formats):
    grid = state["grid"]
    delta = mather_delta(state["h"])
    state["delta"] = delta
    Q = quotient(delta, state["A"], cfg.merge_threshold(grid))
    state["Q"] = Q
    rep = representation_check(state["h"], delta, state["A"])
    pos = delta.positions_of(np.asarray(sum(Q.classes, []), dtype=np.int64))
    diam = 0.0
    start = 0
    for members in Q.classes:
        p = pos[start:start + len(members)]
        start += len(members)
        diam = max(diam, float(np.max(delta.values[np.ix_(p, p)])))
    files = []
    if "csv" in formats:
        rows = ((ci, m) for ci, members in enumerate(Q.classes) for m in members)
        files.append(write_csv(os.path.join(out, "quotient.csv"),
                               ["class_id", "member_index"], rows))
    if "json" in formats:
        files.append(write_json(os.path.join(out, "quotient.json"), {
            "class_count": Q.class_count,
            "max_class_diameter_delta": diam,
            "eta": state["A"].threshold,
            "merge_threshold": Q.merge_threshold,
            "representation_max_residual": rep.max_residual,
        }))
    return files


def _auto_scales(delta, indices) -> np.ndarray:
    """Geometric scale grid spanning the positive delta range of the set."""
    pos = delta.positions_of(np.asarray(indices, dtype=np.int64))
    sub = delta.values[np.ix_(pos, pos)]
    off = sub[sub > 0]
    if off.size == 0:
        return np.geomspace(1e-4, 1e-1, 6)
    hi = float(np.max(off))
    lo = max(float(np.min(off)) / 2.0, hi * 1e-4)
    return np.geomspace(lo, hi, 8)


def _stage_dimension(cfg, state, out, formats):
    delta, A = state["delta"], state["A"]
    scales = _auto_scales(delta, A.indices)
    report = hausdorff1_report(delta, A.indices, scales)
    state["dimension"] = report
    files = []
    if "csv" in formats:
        rows = zip(report.scales, report.covering_counts, report.h1_estimates)
        files.append(write_csv(os.path.join(out, "dimension.csv"),
                               ["r", "covering_count", "h1_estimate"], rows))
    if "json" in formats:
        files.append(write_json(os.path.join(out, "dimension.json"),
                                {"dim_slope": report.dim_slope}))
    return files


def _stage_regularize(cfg, state, out, formats):
    grid, K, L = state["grid"], state["K"], state["L"]
    c = state["cv"].c
    u = state["sol"].u
    schedule = default_schedule(K.tau, stages=int(cfg.raw["regularizer"]["stages"]))
    tol = max(cfg.solver_tol(), 8 * state["sol"].residual)
    v = alternating_smooth(u, K, c, schedule, tol=tol)
    resid = subsolution_residual_field(v, L, grid)
    files = []
    if "csv" in formats:
        rows = ((i, u.values[i], v.values[i], resid[i] - c)
                for i in range(grid.point_count))
        files.append(write_csv(os.path.join(out, "regularize.csv"),
                               ["index", "u_in", "u_out", "H_residual"], rows))
    if "json" in formats:
        files.append(write_json(os.path.join(out, "regularize.json"), {
            "semiconvexity_before": semiconvexity_constant(u),
            "semiconvexity_after": semiconvexity_constant(v),
            "semiconcavity_before": semiconcavity_constant(u),
            "semiconcavity_after": semiconcavity_constant(v),
            "max_aubry_drift": aubry_drift(u, v, state["A"].indices),
        }))
    state["smoothed"] = v
    return files


_STAGE_FN = {
    "critical": _stage_critical,
    "weakkam": _stage_weakkam,
    "barrier": _stage_barrier,
    "aubry": _stage_aubry,
    "quotient": _stage_quotient,
    "dimension": _stage_dimension,
    "regularize": _stage_regularize,
}


def _expand_stages(stages) -> list:
    want = set()
    for s in stages:
        if s not in STAGE_DEPS:
            raise ConfigError(f"unknown stage {s!r}; known: {sorted(STAGE_DEPS)}")
        want.add(s)
        want.update(STAGE_DEPS[s])
    return [s for s in STAGE_ORDER if s in want]


def _prepare_out(cfg: ExperimentConfig, out_dir) -> tuple:
    outputs = cfg.outputs()
    out = out_dir or outputs["directory"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        raise ArtifactError(f"cannot create output directory {out}: {e}") from e
    return out, list(outputs["formats"])


def _finish_manifest(out, manifest, files) -> dict:
    manifest["checksums"] = {os.path.basename(p): _sha256(p) for p in sorted(files)}
    write_json(os.path.join(out, "manifest.json"), manifest)
    return manifest


class _Runner:
    """Accumulates stage results, files and timings into one manifest."""

    def __init__(self, cfg: ExperimentConfig, out_dir=None, state=None):
        self.cfg = cfg
        self.out, self.formats = _prepare_out(cfg, out_dir)
        self.state = {} if state is None else state
        self.manifest = {"config": cfg.echo(), "stages": {}, "status": "ok"}
        self.files = []

    def run_stage(self, name, fn):
        t0 = time.perf_counter()
        try:
            stage_files = fn()
        except WeakKamError as e:
            self.manifest["status"] = "error"
            self.manifest["error"] = {"stage": name, "type": type(e).__name__,
                                      "message": str(e)}
            _finish_manifest(self.out, self.manifest, self.files)
            raise
        self.files.extend(stage_files)
        self.manifest["stages"][name] = {
            "files": [os.path.basename(p) for p in stage_files],
            "wall_time_s": time.perf_counter() - t0,
        }

    def finish(self) -> dict:
        if self.state.get("notes"):
            self.manifest["notes"] = self.state["notes"]
        return _finish_manifest(self.out, self.manifest, self.files)


def _chains_stage(cfg, state, out, formats):
    grid = state.setdefault("grid", cfg.grid())
    X = cfg.vector_field(grid)
    params = cfg.dynamics_params(grid, X)
    g = chain_graph(X, grid, **params)
    chain = chain_recurrent_set(g)
    state["chain"] = chain
    state["chain_params"] = params
    files = []
    if "csv" in formats:
        coords = grid.coords(chain)
        rows = ((int(chain[k]), *coords[k]) for k in range(chain.size))
        files.append(write_csv(os.path.join(out, "chain_set.csv"),
                               ["index", *_coord_header(grid.dim)], rows))
    if "json" in formats:
        files.append(write_json(os.path.join(out, "chains.json"), {
            "size": int(chain.size), **params,
        }))
    return files


def _comparison_stage(cfg, state, out, formats):
    cmp = compare_aubry_chain(state["A"].indices, state["chain"], state["grid"])
    state["comparison"] = cmp
    files = []
    if "json" in formats:
        files.append(write_json(os.path.join(out, "comparison.json"), {
            "hausdorff_distance": cmp.hausdorff_distance,
            "a_only_size": int(cmp.a_only.size),
            "b_only_size": int(cmp.b_only.size),
            "aubry_size": cmp.a_size,
            "chain_size": cmp.b_size,
        }))
    return files


def run_pipeline(cfg: ExperimentConfig, stages, out_dir=None, state=None) -> dict:
    """Execute the requested stages (plus prerequisites) and write artifacts.

    Raises the stage's error after writing a partial manifest with an
    error record, so CLI exit codes can reflect the failure class.
    """
    runner = _Runner(cfg, out_dir, state)
    for name in _expand_stages(stages):
        fn = _STAGE_FN[name]
        runner.run_stage(name, lambda f=fn: f(cfg, runner.state, runner.out, runner.formats))
    return runner.finish()


def run_chains(cfg: ExperimentConfig, out_dir=None, state=None) -> dict:
    """Chain-recurrence side only: flow graph, SCC set, artifacts."""
    runner = _Runner(cfg, out_dir, state)
    runner.run_stage("chains", lambda: _chains_stage(cfg, runner.state, runner.out,
                                                     runner.formats))
    return runner.finish()


def run_comparison(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Variational Aubry set vs chain-recurrent set for a Mane model."""
    if cfg.raw["model"].get("family") != "mane":
        raise ConfigError("mane-compare requires model.family='mane'")
    runner = _Runner(cfg, out_dir)
    for name in _expand_stages(["aubry"]):
        fn = _STAGE_FN[name]
        runner.run_stage(name, lambda f=fn: f(cfg, runner.state, runner.out, runner.formats))
    runner.run_stage("chains", lambda: _chains_stage(cfg, runner.state, runner.out,
                                                     runner.formats))
    runner.run_stage("comparison", lambda: _comparison_stage(cfg, runner.state, runner.out,
                                                             runner.formats))
    return runner.finish()


def load_points_csv(path) -> np.ndarray:
    """Points file: one row per point, comma-separated coordinates."""
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise ArtifactError(f"cannot read points file {path}: {e}") from e
    rows = []
    width = None
    for ln, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        if ln == 1 and any(c.isalpha() for c in text):
            continue  # header row
        try:
            vals = [float(tok) for tok in text.split(",")]
        except ValueError as e:
            raise ConfigError(f"{path} line {ln}: not a numeric row ({text!r})") from e
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ConfigError(
                f"{path} line {ln}: expected {width} coordinates, got {len(vals)}")
        rows.append(vals)
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least two points")
    return np.asarray(rows, dtype=float)


def _ferry_stage(cfg, state, out, formats, path, exponent):
    pts = load_points_csv(path)
    dp = ferry_delta_p(pts, exponent)
    state["ferry"] = dp
    k = dp.size
    files = []
    if "csv" in formats:
        rows = ((i, j, dp.values[i, j]) for i in range(k) for j in range(k))
        files.append(write_csv(os.path.join(out, "ferry.csv"), ["i", "j", "delta_p"], rows))
    if "json" in formats:
        files.append(write_json(os.path.join(out, "ferry.json"), {
            "p": exponent, "point_count": k,
            "endpoint_value": float(dp.values[0, k - 1]),
            "max_value": float(np.max(dp.values)),
        }))
    return files


def run_ferry(cfg: ExperimentConfig, points_path=None, p=None, out_dir=None) -> dict:
    """Chain semi-metric demo on a point cloud file."""
    fcfg = cfg.raw.get("ferry", {})
    path = points_path or fcfg.get("points")
    if not path:
        raise ConfigError("ferry needs a points CSV (config ferry.points or --points)")
    exponent = float(p if p is not None else fcfg.get("p", 2.0))
    runner = _Runner(cfg, out_dir)
    runner.run_stage("ferry", lambda: _ferry_stage(cfg, runner.state, runner.out,
                                                   runner.formats, path, exponent))
    return runner.finish()


def run_all(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Every applicable stage: full pipeline, plus the chain comparison
    for Mane models and the ferry demo when a points file is configured."""
    runner = _Runner(cfg, out_dir)
    for name in STAGE_ORDER:
        fn = _STAGE_FN[name]
        runner.run_stage(name, lambda f=fn: f(cfg, runner.state, runner.out, runner.formats))
    if cfg.raw["model"].get("family") == "mane":
        runner.run_stage("chains", lambda: _chains_stage(cfg, runner.state, runner.out,
                                                         runner.formats))
        runner.run_stage("comparison", lambda: _comparison_stage(
            cfg, runner.state, runner.out, runner.formats))
    if cfg.raw.get("ferry", {}).get("points"):
        runner.run_stage("ferry", lambda: _ferry_stage(
            cfg, runner.state, runner.out, runner.formats,
            cfg.raw["ferry"]["points"], float(cfg.raw["ferry"].get("p", 2.0))))
    return runner.finish()
