"""Scenario configuration: TOML parsing, validation and serialization.

A document has top-level scalars (mode, sign, t_final, ...) and the tables
[grid], [solver], [picard], [initial.f], [initial.phi0], [initial.phi1],
[blowup] and [kernels].  Every key is checked; unknown keys are errors that
name their full path.
"""
import inspect
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import tomli_w

from .errors import ConfigError
from .field_1d import ATTRACTIVE, REPULSIVE
from .initial_data import DENSITY_FAMILIES, PROFILE_FAMILIES, RADIAL_FAMILIES, make_density, make_profile, wave_data
from .phase_grid import Lattice
from .solver_1d import SolverOptions

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("solve1d", "picard1d", "blowup3d", "kernelcheck")
SIGNS = (ATTRACTIVE, REPULSIVE)
# dt and dx are compared with this relative allowance, the same as the field step
DT_RTOL = 1e-12


@dataclass(frozen=True)
class GridSettings:
    x_min: float = -8.0
    x_max: float = 8.0
    nx: int = 256
    p_min: float = -6.0
    p_max: float = 6.0
    np: int = 128

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx


@dataclass(frozen=True)
class PicardSettings:
    tol: float = 1e-12
    max_iter: int = 50


@dataclass(frozen=True)
class FamilyChoice:
    family: str = "zero"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BlowupSettings:
    family: str = "bump"
    radius: float = 1.0
    mu0: float = 2.0
    nq: int = 2000
    phi0: float = 0.0
    dphi0: float = 2.0
    R: float = 1.0
    dt: float = 1e-3
    phi_max: float = 30.0
    max_steps: int = 200_000
    t_max: float = 50.0


@dataclass(frozen=True)
class KernelSettings:
    samples: int = 1_000_000
    p_max: float = 1e3
    sphere_order: int = 64
    chunk: int = 200_000


@dataclass(frozen=True)
class SimConfig:
    mode: str
    sign: str = ATTRACTIVE
    t_final: Optional[float] = None
    dt: Optional[float] = None
    snapshot_every: int = 0
    output_dir: str = "output"
    seed: int = 0
    grid: GridSettings = GridSettings()
    solver: SolverOptions = SolverOptions()
    picard: PicardSettings = PicardSettings()
    f_in: FamilyChoice = FamilyChoice()
    phi0: FamilyChoice = FamilyChoice()
    phi1: FamilyChoice = FamilyChoice()
    blowup: BlowupSettings = BlowupSettings()
    kernels: KernelSettings = KernelSettings()

    # interface used by solver_1d.run
    def lattice(self):
        g = self.grid
        return Lattice(g.x_min, g.x_max, g.nx, g.p_min, g.p_max, g.np)

    def density(self):
        return make_density(self.f_in.family, **self.f_in.params)

    def wave_data(self):
        return wave_data(make_profile(self.phi0.family, **self.phi0.params),
                         make_profile(self.phi1.family, **self.phi1.params))

    def solver_options(self):
        return self.solver

    def profile(self):
        from .blowup_3d import MomentumProfile
        b = self.blowup
        return MomentumProfile.family(b.family, b.radius, b.mu0, b.nq)

    def controls(self):
        from .blowup_3d import Controls
        b = self.blowup
        return Controls(b.dt, b.phi_max, b.max_steps, b.t_max)

    def with_output_dir(self, path):
        return replace(self, output_dir=str(path))

    def to_dict(self):
        """Plain-dict form; ``parse_config(serialize_config(c)) == c``."""
        out = {"mode": self.mode, "sign": self.sign}
        if self.t_final is not None:
            out["t_final"] = self.t_final
        if self.dt is not None:
            out["dt"] = self.dt
        out.update(snapshot_every=self.snapshot_every, output_dir=self.output_dir, seed=self.seed)
        out["grid"] = asdict(self.grid)
        out["solver"] = asdict(self.solver)
        out["picard"] = asdict(self.picard)
        out["initial"] = {name: {"family": choice.family, **choice.params}
                          for name, choice in (("f", self.f_in), ("phi0", self.phi0), ("phi1", self.phi1))}
        out["blowup"] = asdict(self.blowup)
        out["kernels"] = asdict(self.kernels)
        return out


def _check_type(path, value, default):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
        want = "a boolean"
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
        want = "an integer"
    elif isinstance(default, float) or default is None:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        want = "a number"
        if ok:
            value = float(value)
    else:
        ok = isinstance(value, str)
        want = "a string"
    if not ok:
        raise ConfigError(f"{path}: expected {want}, got {value!r}")
    return value


def _table(doc, path, cls):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a table")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"unknown key {path}.{key}")
        kwargs[key] = _check_type(f"{path}.{key}", value, known[key].default)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _family(doc, path, registry):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a table")
    doc = dict(doc)
    family = doc.pop("family", "zero")
    if family not in registry:
        raise ConfigError(f"{path}.family: unknown family {family!r}; choose from {sorted(registry)}")
    sig = inspect.signature(registry[family])
    params = {}
    for key, value in doc.items():
        if key not in sig.parameters:
            raise ConfigError(f"unknown key {path}.{key} for family {family!r}")
        params[key] = _check_type(f"{path}.{key}", value, sig.parameters[key].default)
    return FamilyChoice(family, params)


_TOP = {"mode", "sign", "t_final", "dt", "snapshot_every", "output_dir", "seed",
        "grid", "solver", "picard", "initial", "blowup", "kernels"}


def config_from_dict(doc):
    """Build and validate a SimConfig from a parsed document."""
    for key in doc:
        if key not in _TOP:
            raise ConfigError(f"unknown key {key}")
    if "mode" not in doc:
        raise ConfigError("mode: required key missing")
    mode = doc["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode: must be one of {list(MODES)}, got {mode!r}")
    sign = doc.get("sign", ATTRACTIVE)
    if sign not in SIGNS:
        raise ConfigError(f"sign: must be one of {list(SIGNS)}, got {sign!r}")
    kw = {}
    for key, default in (("t_final", None), ("dt", None), ("snapshot_every", 0), ("output_dir", ""), ("seed", 0)):
        if key in doc:
            kw[key] = _check_type(key, doc[key], default)
    init = doc.get("initial", {})
    if not isinstance(init, dict):
        raise ConfigError("initial: expected a table")
    for key in init:
        if key not in ("f", "phi0", "phi1"):
            raise ConfigError(f"unknown key initial.{key}")
    grid = _table(doc.get("grid", {}), "grid", GridSettings)
    cfg = SimConfig(
        mode=mode, sign=sign, **kw,
        grid=grid,
        solver=_table(doc.get("solver", {}), "solver", SolverOptions),
        picard=_table(doc.get("picard", {}), "picard", PicardSettings),
        f_in=_family(init.get("f", {}), "initial.f", DENSITY_FAMILIES),
        phi0=_family(init.get("phi0", {}), "initial.phi0", PROFILE_FAMILIES),
        phi1=_family(init.get("phi1", {}), "initial.phi1", PROFILE_FAMILIES),
        blowup=_table(doc.get("blowup", {}), "blowup", BlowupSettings),
        kernels=_table(doc.get("kernels", {}), "kernels", KernelSettings),
    )
    validate(cfg)
    return cfg


def validate(cfg):
    g = cfg.grid
    if g.nx < 8 or g.np < 8:
        raise ConfigError(f"grid.nx and grid.np must be >= 8 (got nx={g.nx}, np={g.np})")
    if not (g.x_max > g.x_min):
        raise ConfigError(f"grid: need x_min < x_max (got {g.x_min}, {g.x_max})")
    if not (g.p_max > g.p_min):
        raise ConfigError(f"grid: need p_min < p_max (got {g.p_min}, {g.p_max})")
    if cfg.snapshot_every < 0:
        raise ConfigError("snapshot_every: must be >= 0")
    if cfg.mode in ("solve1d", "picard1d"):
        if cfg.t_final is None:
            raise ConfigError("t_final: required for 1D modes")
        if cfg.dt is not None and abs(cfg.dt - g.dx) > DT_RTOL * g.dx:
            raise ConfigError(f"dt: must equal dx = (x_max - x_min)/nx; got dt={cfg.dt!r}, dx={g.dx!r}")
        cfg.density()
        cfg.wave_data()
    if cfg.t_final is not None and not cfg.t_final > 0:
        raise ConfigError(f"t_final: must be > 0 (got {cfg.t_final})")
    if cfg.picard.tol < 0 or cfg.picard.max_iter < 1:
        raise ConfigError("picard: need tol >= 0 and max_iter >= 1")
    b = cfg.blowup
    if b.family not in RADIAL_FAMILIES:
        raise ConfigError(f"blowup.family: unknown family {b.family!r}; choose from {sorted(RADIAL_FAMILIES)}")
    if cfg.mode == "blowup3d":
        if not (b.radius > 0 and b.nq >= 2 and b.mu0 >= 0 and b.R > 0):
            raise ConfigError("blowup: need radius > 0, nq >= 2, mu0 >= 0, R > 0")
        cfg.controls()
    k = cfg.kernels
    if cfg.mode == "kernelcheck" and not (k.samples >= 1 and k.p_max > 0 and k.sphere_order >= 2 and k.chunk >= 1):
        raise ConfigError("kernels: need samples >= 1, p_max > 0, sphere_order >= 2, chunk >= 1")


def parse_config(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return config_from_dict(doc)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg):
    return tomli_w.dumps(cfg.to_dict())
