"""Experiment configuration: JSON file -> validated ExperimentConfig.

The schema is a fixed key tree; unknown keys are rejected so typos fail
fast instead of silently falling back to defaults. Numeric fields accept
the string "auto" where a resolution-dependent default exists.
"""

import copy
import json
from dataclasses import dataclass

from .errors import ArtifactError, ConfigError
from .grid import GridTorus, build_grid
from .kernel import ActionKernel, build_kernel
from .models import Lagrangian, VectorField, make_lagrangian, make_vector_field


DEFAULTS = {
    "model": {"family": "kinetic"},
    "grid": {"dim": 1, "n": 256},
    "kernel": {"tau": "auto", "stencil_radius": "auto"},
    "solver": {"tol": 1e-9, "max_iter": "auto", "horizon": "auto"},
    "aubry": {"eta_mode": "auto", "merge_threshold": "auto"},
    "dynamics": {"dt": "auto", "eps": "auto", "substeps": 4},
    "regularizer": {"stages": 4},
    "ferry": {"points": None, "p": 2.0},
    "outputs": {"directory": "out", "formats": ["csv", "json"]},
    "seed": 0,
}

# sections whose sub-keys are fixed; "model" and "ferry" carry free-form
# parameter maps validated by their builders
_STRICT_SECTIONS = ["grid", "kernel", "solver", "aubry", "dynamics",
                    "regularizer", "outputs"]


def _merged(user: dict) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    for key, val in user.items():
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r}; expected one of {sorted(cfg)}")
        if isinstance(cfg[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config section {key!r} must be a mapping")
            if key in _STRICT_SECTIONS:
                bad = set(val) - set(cfg[key])
                if bad:
                    raise ConfigError(
                        f"unknown keys in config section {key!r}: {sorted(bad)}")
            cfg[key].update(val)
        else:
            cfg[key] = val
    return cfg


def _numeric(section: dict, key: str, where: str, minimum=None, auto_ok=False):
    val = section[key]
    if auto_ok and (val == "auto" or val is None):
        return "auto"
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}, got {val}")
    return val


@dataclass
class ExperimentConfig:
    raw: dict

    # -- construction --------------------------------------------------------

    @classmethod
    def from_dict(cls, user: dict) -> "ExperimentConfig":
        cfg = cls(raw=_merged(user))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as f:
                text = f.read()
        except OSError as e:
            raise ArtifactError(f"cannot read config {path}: {e}") from e
        try:
            user = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(user, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(user)

    def validate(self):
        r = self.raw
        g = r["grid"]
        if g.get("dim") not in (1, 2):
            raise ConfigError(f"grid.dim must be 1 or 2, got {g.get('dim')!r}")
        _numeric(g, "n", "grid", minimum=4)
        _numeric(r["kernel"], "tau", "kernel", minimum=1e-12, auto_ok=True)
        _numeric(r["kernel"], "stencil_radius", "kernel", minimum=1e-12, auto_ok=True)
        _numeric(r["solver"], "tol", "solver", minimum=0.0)
        _numeric(r["solver"], "max_iter", "solver", minimum=1, auto_ok=True)
        _numeric(r["solver"], "horizon", "solver", minimum=1, auto_ok=True)
        eta = r["aubry"]["eta_mode"]
        if eta != "auto":
            _numeric(r["aubry"], "eta_mode", "aubry", minimum=0.0)
        _numeric(r["aubry"], "merge_threshold", "aubry", minimum=0.0, auto_ok=True)
        _numeric(r["dynamics"], "dt", "dynamics", minimum=1e-12, auto_ok=True)
        _numeric(r["dynamics"], "eps", "dynamics", minimum=1e-12, auto_ok=True)
        _numeric(r["dynamics"], "substeps", "dynamics", minimum=1)
        _numeric(r["regularizer"], "stages", "regularizer", minimum=1)
        seed = r["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"seed must be an integer, got {seed!r}")
        formats = r["outputs"].get("formats")
        if (not isinstance(formats, list) or not formats
                or any(f not in ("csv", "json") for f in formats)):
            raise ConfigError(f"outputs.formats must be a nonempty subset of ['csv','json']")
        if not isinstance(r["outputs"].get("directory"), str):
            raise ConfigError("outputs.directory must be a string path")
        p = r["ferry"].get("p", 2.0)
        if isinstance(p, bool) or not isinstance(p, (int, float)) or p <= 0:
            raise ConfigError(f"ferry.p must be a positive number, got {p!r}")

    # -- resolved accessors ---------------------------------------------------

    def grid(self) -> GridTorus:
        return build_grid(self.raw["grid"]["dim"], self.raw["grid"]["n"])

    def lagrangian(self, grid: GridTorus) -> Lagrangian:
        return make_lagrangian(self.raw["model"], grid)

    def vector_field(self, grid: GridTorus) -> VectorField:
        model = self.raw["model"]
        if model.get("family") != "mane":
            raise ConfigError(
                f"a vector field requires model.family='mane', got {model.get('family')!r}")
        return make_vector_field(model.get("field", {}), grid)

    def tau(self, grid: GridTorus) -> float:
        t = self.raw["kernel"]["tau"]
        return grid.spacing if t == "auto" else float(t)

    def stencil_radius(self, grid: GridTorus) -> float:
        s = self.raw["kernel"]["stencil_radius"]
        return 4.0 * grid.spacing if s == "auto" else float(s)

    def kernel(self, grid: GridTorus, L: Lagrangian) -> ActionKernel:
        return build_kernel(grid, L, tau=self.tau(grid),
                            stencil_radius=self.stencil_radius(grid))

    def solver_tol(self) -> float:
        return float(self.raw["solver"]["tol"])

    def max_iter(self, grid: GridTorus):
        m = self.raw["solver"]["max_iter"]
        return None if m == "auto" else int(m)

    def horizon(self):
        h = self.raw["solver"]["horizon"]
        return None if h == "auto" else int(h)

    def eta(self):
        e = self.raw["aubry"]["eta_mode"]
        return None if e == "auto" else float(e)

    def merge_threshold(self, grid: GridTorus) -> float:
        m = self.raw["aubry"]["merge_threshold"]
        return 8.0 * grid.spacing**2 if m == "auto" else float(m)

    def dynamics_params(self, grid: GridTorus, X: VectorField) -> dict:
        d = self.raw["dynamics"]
        eps = 0.75 * grid.spacing if d["eps"] == "auto" else float(d["eps"])
        if d["dt"] == "auto":
            dt = 16.0 * grid.spacing / max(1.0, X.max_norm_on(grid))
        else:
            dt = float(d["dt"])
        return {"dt": dt, "eps": eps, "substeps": int(d["substeps"])}

    def seed(self) -> int:
        return int(self.raw["seed"])

    def outputs(self) -> dict:
        return dict(self.raw["outputs"])

    def echo(self) -> dict:
        """Deep copy of the resolved raw tree for manifest embedding."""
        return copy.deepcopy(self.raw)
