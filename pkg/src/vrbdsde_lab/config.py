"""Schema-versioned TOML scenario configs.

Every section is a dataclass.  Parsing rejects unknown keys and reports the
dotted key at fault; ``dumps(loads(text))`` reproduces canonical text and
``loads(dumps(cfg)) == cfg`` for every valid config.
"""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coefficients import (
    FUNCTIONALS,
    BoundarySpec,
    DiffusionSpec,
    DriftSpec,
    affine_diffusion,
    constant_boundary,
    convex_boundary,
    lattice_functional,
    linear_drift,
    ramp_boundary,
)
from .errors import ConfigError
from .vrbdsde import Y0_POLICIES, SolverOptions

SCHEMA_VERSION = 1
EXPERIMENTS = ("solve", "represent", "skorohod", "compare", "stability", "validate", "bounds")
STOPPING_FAMILIES = ("grid", "grid+hitting")

# boundary preset -> allowed parameters with defaults
BOUNDARY_PARAMS = {
    "constant": {"level": 0.0},
    "ramp": {"beta": 2.0, "cap": 1.0},
    "convex": {"scale": 1.0},
    "lattice_functional": {"phi": "w2", "scale": 1.0},
}


@dataclass
class GridConfig:
    T: float = 1.0
    N: int = 6


@dataclass
class DriftConfig:
    """f(t, y, l) = a - b*l + c*y with declared constants."""

    preset: str = "linear"
    a: float = 0.0
    b: float = 1.0
    c: float = 0.0
    lipschitz_y: float | None = None
    k: float | None = None
    K: float | None = None


@dataclass
class DiffusionConfig:
    """g(t, y) = d + e*y."""

    preset: str = "affine_g"
    d: float = 0.0
    e: float = 0.0
    lipschitz_y: float | None = None


@dataclass
class BoundaryConfig:
    preset: str = "ramp"
    params: dict = field(default_factory=dict)


@dataclass
class SolverConfig:
    tol_fp: float | None = None
    tol_l: float | None = None
    max_iter: int = 200
    strict: bool = True
    y0_policy: str = "boundary"
    bracket: list = field(default_factory=lambda: [-1.0, 1.0])
    dense: bool = False


@dataclass
class CompareConfig:
    """Second problem: omitted sections repeat the first problem's."""

    drift: DriftConfig | None = None
    boundary: BoundaryConfig | None = None
    epsilon: float | None = None
    tol: float = 1e-8


@dataclass
class StabilityConfig:
    shifts: list = field(default_factory=lambda: [1.0, 0.5, 0.25, 0.125])
    boundaries: list = field(default_factory=list)
    family: str = "grid"
    levels: list = field(default_factory=list)
    tol: float = 1e-10


@dataclass
class BoundsConfig:
    y: float = 0.0
    y_prime: float = 0.1
    shift: float | None = 0.1
    family: str = "grid"
    levels: list = field(default_factory=list)


@dataclass
class ValidateConfig:
    gamma: float | None = None
    l_min: float = -4.0
    l_max: float = 4.0
    n_l: int = 17
    ys: list = field(default_factory=lambda: [-1.0, 0.0, 1.0])
    family: str = "grid"
    levels: list = field(default_factory=list)


@dataclass
class OutputConfig:
    # "path": one CSV row per path state; "node": fibre means per lattice node
    granularity: str = "path"


@dataclass
class ScenarioConfig:
    schema_version: int = SCHEMA_VERSION
    experiment: str = "solve"
    seed: int = 0
    grid: GridConfig = field(default_factory=GridConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    validate: ValidateConfig = field(default_factory=ValidateConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


# parsing -------------------------------------------------------------------------

_SECTIONS = {
    "grid": GridConfig,
    "drift": DriftConfig,
    "diffusion": DiffusionConfig,
    "solver": SolverConfig,
    "bounds": BoundsConfig,
    "validate": ValidateConfig,
    "output": OutputConfig,
}


def _check_type(key: str, value, default):
    """Coerce ints to floats where a float is expected; reject other mismatches."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, float) or default is None and isinstance(value, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(key, f"expected a string, got {value!r}")
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {value!r}")
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return [float(v) for v in value]
    return value


def _section(cls, data, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a table")
    defaults = cls()
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}", f"unknown key; allowed: {sorted(known)}")
    kwargs = {}
    for name in known:
        if name in data:
            kwargs[name] = _check_type(f"{prefix}.{name}", data[name], getattr(defaults, name))
    return cls(**kwargs)


def _boundary_section(data, prefix: str) -> BoundaryConfig:
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a table")
    preset = data.get("preset", "ramp")
    if preset not in BOUNDARY_PARAMS:
        raise ConfigError(f"{prefix}.preset", f"unknown boundary preset {preset!r}; known: {sorted(BOUNDARY_PARAMS)}")
    allowed = BOUNDARY_PARAMS[preset]
    params = {}
    for key, value in data.items():
        if key == "preset":
            continue
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", f"unknown key for preset {preset!r}; allowed: {sorted(allowed)}")
        params[key] = _check_type(f"{prefix}.{key}", value, allowed[key])
    if preset == "lattice_functional" and params.get("phi", "w2") not in FUNCTIONALS:
        raise ConfigError(f"{prefix}.phi", f"unknown functional; known: {sorted(FUNCTIONALS)}")
    return BoundaryConfig(preset, params)


def from_dict(data: dict) -> ScenarioConfig:
    top = {f.name for f in fields(ScenarioConfig)}
    for key in data:
        if key not in top:
            raise ConfigError(key, f"unknown top-level key; allowed: {sorted(top)}")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    cfg = ScenarioConfig()
    experiment = data.get("experiment", cfg.experiment)
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}; known: {list(EXPERIMENTS)}")
    cfg.experiment = experiment
    cfg.seed = _check_type("seed", data.get("seed", 0), 0)
    for name, cls in _SECTIONS.items():
        if name in data:
            setattr(cfg, name, _section(cls, data[name], name))
    if "boundary" in data:
        cfg.boundary = _boundary_section(data["boundary"], "boundary")
    if "compare" in data:
        raw = dict(data["compare"])
        drift = raw.pop("drift", None)
        boundary = raw.pop("boundary", None)
        cfg.compare = _section(CompareConfig, raw, "compare")
        cfg.compare.drift = _section(DriftConfig, drift, "compare.drift") if drift is not None else None
        cfg.compare.boundary = _boundary_section(boundary, "compare.boundary") if boundary is not None else None
    if "stability" in data:
        raw = dict(data["stability"])
        boundaries = raw.pop("boundaries", [])
        cfg.stability = _section(StabilityConfig, raw, "stability")
        cfg.stability.boundaries = [
            _boundary_section(b, f"stability.boundaries[{i}]") for i, b in enumerate(boundaries)
        ]
    validate_config(cfg)
    return cfg


def validate_config(cfg: ScenarioConfig) -> None:
    if not cfg.grid.T > 0:
        raise ConfigError("grid.T", f"horizon must be positive, got {cfg.grid.T}")
    if cfg.grid.N < 1:
        raise ConfigError("grid.N", f"need at least one step, got {cfg.grid.N}")
    for prefix, d in (("drift", cfg.drift), ("compare.drift", cfg.compare.drift)):
        if d is None:
            continue
        if d.preset != "linear":
            raise ConfigError(f"{prefix}.preset", f"unknown drift preset {d.preset!r}; known: ['linear']")
        if not d.b > 0:
            raise ConfigError(f"{prefix}.b", "the l-coefficient b must be positive (f strictly decreasing in l)")
    if cfg.diffusion.preset != "affine_g":
        raise ConfigError("diffusion.preset", f"unknown diffusion preset {cfg.diffusion.preset!r}; known: ['affine_g']")
    s = cfg.solver
    if s.y0_policy not in Y0_POLICIES:
        raise ConfigError("solver.y0_policy", f"expected one of {list(Y0_POLICIES)}, got {s.y0_policy!r}")
    if len(s.bracket) != 2 or not s.bracket[0] < s.bracket[1]:
        raise ConfigError("solver.bracket", f"expected [lo, hi] with lo < hi, got {s.bracket!r}")
    if s.max_iter < 2:
        raise ConfigError("solver.max_iter", "must be at least 2 (one step plus a confirming step)")
    for key, fam in (
        ("stability.family", cfg.stability.family),
        ("bounds.family", cfg.bounds.family),
        ("validate.family", cfg.validate.family),
    ):
        if fam not in STOPPING_FAMILIES:
            raise ConfigError(key, f"expected one of {list(STOPPING_FAMILIES)}, got {fam!r}")
    if cfg.output.granularity not in ("path", "node"):
        raise ConfigError("output.granularity", "expected 'path' or 'node'")
    if cfg.validate.n_l < 2:
        raise ConfigError("validate.n_l", "need at least two probe levels")


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    return from_dict(data)


def load(path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc}") from None
    return loads(text)


# serialization ---------------------------------------------------------------------

def _strip_none(d: dict) -> dict:
    return {k: (_strip_none(v) if isinstance(v, dict) else v) for k, v in d.items() if v is not None}


def _boundary_dict(b: BoundaryConfig) -> dict:
    return {"preset": b.preset, **b.params}


def to_dict(cfg: ScenarioConfig) -> dict:
    out = {"schema_version": cfg.schema_version, "experiment": cfg.experiment, "seed": cfg.seed}
    for name in ("grid", "drift", "diffusion"):
        out[name] = asdict(getattr(cfg, name))
    out["boundary"] = _boundary_dict(cfg.boundary)
    out["solver"] = asdict(cfg.solver)
    cmp_ = {"epsilon": cfg.compare.epsilon, "tol": cfg.compare.tol}
    if cfg.compare.drift is not None:
        cmp_["drift"] = asdict(cfg.compare.drift)
    if cfg.compare.boundary is not None:
        cmp_["boundary"] = _boundary_dict(cfg.compare.boundary)
    out["compare"] = cmp_
    st = asdict(cfg.stability)
    st["boundaries"] = [_boundary_dict(b) for b in cfg.stability.boundaries]
    out["stability"] = st
    for name in ("bounds", "validate", "output"):
        out[name] = asdict(getattr(cfg, name))
    return _strip_none(out)


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


# builders ----------------------------------------------------------------------------

def build_drift(d: DriftConfig) -> DriftSpec:
    return linear_drift(d.a, d.b, d.c, k=d.k, K=d.K, lipschitz_y=d.lipschitz_y)


def build_diffusion(d: DiffusionConfig) -> DiffusionSpec:
    return affine_diffusion(d.d, d.e, lipschitz_y=d.lipschitz_y)


def build_boundary(b: BoundaryConfig) -> BoundarySpec:
    p = {**BOUNDARY_PARAMS[b.preset], **b.params}
    if b.preset == "constant":
        return constant_boundary(p["level"])
    if b.preset == "ramp":
        return ramp_boundary(p["beta"], p["cap"])
    if b.preset == "convex":
        return convex_boundary(p["scale"])
    return lattice_functional(p["phi"], p["scale"])


def build_solver(s: SolverConfig) -> SolverOptions:
    return SolverOptions(
        tol_fp=s.tol_fp,
        tol_l=s.tol_l,
        max_iter=s.max_iter,
        strict=s.strict,
        y0_policy=s.y0_policy,
        bracket=tuple(s.bracket),
        dense=s.dense,
    )
