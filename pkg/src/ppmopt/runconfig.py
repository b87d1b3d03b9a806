"""Run configuration: one YAML file describes a whole run.

Every value has a documented default (see default_config_yaml / the
print-defaults subcommand); unknown keys are rejected with their dotted
path so typos cannot silently fall back to defaults.  The material
section is all-or-nothing: overriding physics halfway is a config error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .errors import ConfigError
from .kinematics import Branch, DEFAULT_MODE, WorkingMode
from .model import ActuatorStiffness, Bounds, Material, Wrench, steel
from .moga import MogaConfig
from .performance import (AccuracySpec, DexterityConfig, EvalContext,
                          StiffnessLimits)
from .workspace import DELTA_PHI_DEFAULT, GridSpec

_BOUND_KEYS = ("R", "r", "L_b", "r_j", "r_p")


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch run needs, resolved to concrete values."""

    bounds: Bounds
    ctx: EvalContext
    grid: GridSpec
    moga: MogaConfig
    center: tuple[float, float, float]
    delta_phi: float          # [rad], total rotation band
    bisection_tol: float      # [m]
    threads: int
    output_dir: str


class _Section:
    """A mapping being consumed key by key; leftovers are config errors."""

    def __init__(self, data, path: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(path or "<root>", "expected a mapping")
        self.data = dict(data)
        self.path = path

    def sub(self, key: str) -> "_Section":
        return _Section(self.data.pop(key, None), self._join(key))

    def take(self, key: str, default, kind=float):
        if key not in self.data:
            return default
        return self._convert(self.data.pop(key), key, kind)

    def require(self, key: str, kind=float):
        if key not in self.data:
            raise ConfigError(self._join(key), "missing required key")
        return self._convert(self.data.pop(key), key, kind)

    def has_any(self) -> bool:
        return bool(self.data)

    def finish(self):
        if self.data:
            stray = self._join(sorted(self.data)[0])
            raise ConfigError(stray, "unknown key")

    def _join(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def _convert(self, value, key: str, kind):
        if kind is None:
            return value
        try:
            if kind is bool and not isinstance(value, bool):
                raise ValueError
            return kind(value)
        except (TypeError, ValueError):
            raise ConfigError(self._join(key),
                              f"cannot interpret {value!r} as {kind.__name__}")


def _parse_bounds(sec: _Section) -> Bounds:
    lower_sec = sec.sub("lower")
    upper_sec = sec.sub("upper")
    default = Bounds(lower=(0.5, 0.5, 0.5, 0.0, 0.0),
                     upper=(4.0, 4.0, 4.0, 0.1, 0.1))
    lower = tuple(lower_sec.take(k, d) for k, d in zip(_BOUND_KEYS, default.lower))
    upper = tuple(upper_sec.take(k, d) for k, d in zip(_BOUND_KEYS, default.upper))
    lower_sec.finish()
    upper_sec.finish()
    sec.finish()
    try:
        return Bounds(lower=lower, upper=upper)
    except ValueError as exc:
        raise ConfigError(sec.path or "bounds", str(exc))


def _parse_material(sec: _Section) -> Material:
    if not sec.has_any():
        sec.finish()
        return steel()
    density = sec.require("density")
    young = sec.require("young_modulus")
    poisson = sec.take("poisson_ratio", 0.3)
    shear = sec.take("shear_modulus", young / (2.0 * (1.0 + poisson)))
    sec.finish()
    try:
        return Material(density=density, young_modulus=young, shear_modulus=shear)
    except ValueError as exc:
        raise ConfigError(sec.path, str(exc))


def _parse_mode(value, path: str) -> WorkingMode:
    if value is None:
        return DEFAULT_MODE
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(path, "working mode must be a list of 3 branches")
    out = []
    for i, item in enumerate(value):
        name = str(item).upper()
        if name not in ("PLUS", "MINUS"):
            raise ConfigError(f"{path}[{i}]", f"unknown branch {item!r}")
        out.append(Branch[name])
    return tuple(out)


def parse_config(data: dict | None) -> RunConfig:
    """Validate a parsed YAML mapping into a RunConfig."""
    root = _Section(data, "")

    bounds = _parse_bounds(root.sub("bounds"))
    material = _parse_material(root.sub("material"))

    act = root.sub("actuator")
    actuator = ActuatorStiffness(prismatic=act.take("prismatic", 1.0e7),
                                 revolute=act.take("revolute", 1.0e6))
    act.finish()

    wr = root.sub("wrench")
    wrench = Wrench(f_x=wr.take("f_x", 100.0), f_y=wr.take("f_y", 0.0),
                    f_z=wr.take("f_z", 100.0), tau_x=wr.take("tau_x", 0.0),
                    tau_y=wr.take("tau_y", 0.0), tau_z=wr.take("tau_z", 100.0))
    wr.finish()

    acc = root.sub("accuracy")
    accuracy = AccuracySpec(delta_xy_max=acc.take("delta_xy_max", 1e-4),
                            delta_z_max=acc.take("delta_z_max", 1e-3),
                            delta_phiz_max_deg=acc.take("delta_phiz_max_deg", 10.0))
    acc.finish()

    dex = root.sub("dexterity")
    lc = dex.take("characteristic_length", None,
                  kind=lambda v: None if v is None else float(v))
    try:
        dexterity = DexterityConfig(threshold=dex.take("threshold", 0.1),
                                    characteristic_length=lc,
                                    lc_search_range=(dex.take("lc_min", 1e-3),
                                                     dex.take("lc_max", 10.0)))
    except ValueError as exc:
        raise ConfigError("dexterity", str(exc))
    dex.finish()

    ws = root.sub("workspace")
    delta_phi = math.radians(ws.take("delta_phi_deg",
                                     math.degrees(DELTA_PHI_DEFAULT)))
    center_raw = ws.take("center", (0.0, 0.0, 0.0), kind=None)
    if not isinstance(center_raw, (list, tuple)) or len(center_raw) != 3:
        raise ConfigError("workspace.center", "expected [x_c, y_c, phi_c]")
    center = tuple(float(v) for v in center_raw)
    bisection_tol = ws.take("bisection_tol", 1e-3)
    gr = ws.sub("grid")
    try:
        grid = GridSpec(n_radial=gr.take("n_radial", 5, int),
                        n_angular=gr.take("n_angular", 12, int),
                        n_orientation=gr.take("n_orientation", 5, int))
    except ValueError as exc:
        raise ConfigError("workspace.grid", str(exc))
    gr.finish()
    ws.finish()

    mg = root.sub("moga")
    try:
        moga = MogaConfig(
            population=mg.take("population", 30, int),
            generations=mg.take("generations", 200, int),
            p_directional_crossover=mg.take("p_directional_crossover", 0.5),
            p_selection=mg.take("p_selection", 0.05),
            p_mutation=mg.take("p_mutation", 0.1),
            dna_mutation_ratio=mg.take("dna_mutation_ratio", 0.05),
            seed=mg.take("seed", 0, int),
            doe=mg.take("doe", "sobol", str))
    except ValueError as exc:
        raise ConfigError("moga", str(exc))
    mg.finish()

    mode = _parse_mode(root.take("mode", None, kind=None), "mode")
    threads = root.take("threads", 1, int)
    output_dir = root.take("output_dir", "out", str)
    root.finish()

    ctx = EvalContext(material=material, actuator=actuator, wrench=wrench,
                      limits=StiffnessLimits.from_requirements(wrench, accuracy),
                      dexterity=dexterity, mode=mode)
    return RunConfig(bounds=bounds, ctx=ctx, grid=grid, moga=moga,
                     center=center, delta_phi=delta_phi,
                     bisection_tol=bisection_tol, threads=threads,
                     output_dir=output_dir)


def load_config(path: str | None) -> RunConfig:
    """Load a YAML config file (None -> all defaults)."""
    if path is None:
        return parse_config({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}")
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    return parse_config(data)


def default_config_yaml() -> str:
    """The full default configuration, as a documented YAML document."""
    return """\
# ppmopt run configuration; every key is optional and shown at its default.
bounds:
  lower: {R: 0.5, r: 0.5, L_b: 0.5, r_j: 0.0, r_p: 0.0}   # [m]
  upper: {R: 4.0, r: 4.0, L_b: 4.0, r_j: 0.1, r_p: 0.1}   # [m]
material:            # all-or-nothing override (defaults: structural steel)
  density: 7850.0          # [kg/m^3]
  young_modulus: 2.1e+11   # [N/m^2]
  poisson_ratio: 0.3       # shear modulus follows unless given explicitly
actuator:
  prismatic: 1.0e+7        # [N/m] control-loop stiffness, PRR/RPR
  revolute: 1.0e+6         # [N*m/rad], RRR
wrench:                    # service load at the platform center
  f_x: 100.0               # [N]
  f_y: 0.0
  f_z: 100.0
  tau_x: 0.0               # [N*m]
  tau_y: 0.0
  tau_z: 100.0
accuracy:                  # allowed deflections under the wrench
  delta_xy_max: 1.0e-4     # [m]
  delta_z_max: 1.0e-3      # [m]
  delta_phiz_max_deg: 10.0 # [deg]
dexterity:
  threshold: 0.1           # minimum 1/kappa_F over the workspace
  characteristic_length: null   # null = home-optimal search, else [m]
  lc_min: 1.0e-3           # search interval [m]
  lc_max: 10.0
workspace:
  delta_phi_deg: 20.0      # total rotation band of the cylinder
  center: [0.0, 0.0, 0.0]  # (x_c [m], y_c [m], phi_c [rad])
  bisection_tol: 1.0e-3    # [m]
  grid: {n_radial: 5, n_angular: 12, n_orientation: 5}
moga:
  population: 30
  generations: 200
  p_directional_crossover: 0.5
  p_selection: 0.05        # parent cloning
  p_mutation: 0.1
  dna_mutation_ratio: 0.05 # per-bit flip probability
  seed: 0
  doe: sobol               # sobol | latin
mode: [PLUS, PLUS, PLUS]   # working-mode branch per leg
threads: 1                 # parallel fitness workers; 0 = all cores
output_dir: out
"""
