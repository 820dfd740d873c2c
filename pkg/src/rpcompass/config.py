"""TOML scenario configuration: parsing, validation, defaults.

An empty document yields the default scenario: the one-nucleus cigar model
at k = 1e4/s in the 47 uT static field, 91 angles, decay only.  All
physical quantities carry their unit in the key name.  Unknown keys are
rejected.

Recognised keys::

    name = "reference"            # scenario label
    angle_count = 91              # uniform grid on [0, pi/2]
    angle_grid_rad = [ ... ]      # explicit grid (overrides angle_count)
    channels = "decay-only"       # decay-only|generic-noise|dephasing|noise-and-rf
    initial_kind = "singlet"      # singlet|dephased
    rf_mode = "off"               # off|perpendicular|parallel|fixed
    force_integration = false     # integrate even when static

    [model]
    preset = "reference"          # reference|disc|anisotropic-g|two-nuclei
    nuclei = [{ax_mev=..., ay_mev=..., az_mev=...}, ...]   # overrides preset
    g1 = [2.0, 2.0, 2.0]
    g2 = [2.0, 2.0, 2.0]
    k_per_second = 1e4
    gamma_noise_per_second = 0.0
    gamma_z_per_second = 0.0

    [field]
    b0_tesla = 47e-6
    theta_static_rad = 0.0        # used by single-angle commands
    phi_static_rad = 0.0
    b_rf_tesla = 150e-9
    theta_rf_rad = 0.0            # only used when rf_mode = "fixed"
    phi_rf_rad = 0.0
    omega_rad_per_second = "resonant"   # or a number
    rf_phase_rad = 0.0

    [solver]
    dt_seconds = 1e-8
    t_max_seconds = 1.2e-3        # default: 12 / k
    residual_eps = 1e-4
    method = "rk4-fixed"          # rk4-fixed|expm-piecewise
    store_trajectory = false
    trajectory_stride = 100
    rf_phase_samples = 1
"""

import math

import tomli

from .dynamics import METHODS, SolverOptions
from .experiments import (CHANNEL_CHOICES, RF_MODES, ScenarioConfig,
                          default_angle_grid)
from .spin import FieldSpec, GTensor, HyperfineTensor, ModelSpec, resonant_omega


class ConfigError(ValueError):
    """Malformed or invalid configuration document."""


_MODEL_PRESETS = {
    "reference": ModelSpec.reference,
    "disc": ModelSpec.disc,
    "anisotropic-g": ModelSpec.anisotropic_g,
    "two-nuclei": ModelSpec.two_nuclei,
}

_TOP_KEYS = {"name", "angle_count", "angle_grid_rad", "channels",
             "initial_kind", "rf_mode", "force_integration",
             "model", "field", "solver"}
_MODEL_KEYS = {"preset", "nuclei", "g1", "g2", "k_per_second",
               "gamma_noise_per_second", "gamma_z_per_second"}
_FIELD_KEYS = {"b0_tesla", "theta_static_rad", "phi_static_rad", "b_rf_tesla",
               "theta_rf_rad", "phi_rf_rad", "omega_rad_per_second",
               "rf_phase_rad"}
_SOLVER_KEYS = {"dt_seconds", "t_max_seconds", "residual_eps", "method",
                "store_trajectory", "trajectory_stride", "rf_phase_samples"}
_NUCLEUS_KEYS = {"ax_mev", "ay_mev", "az_mev"}


def _reject_unknown(section, keys, allowed):
    unknown = set(keys) - allowed
    if unknown:
        where = f" in [{section}]" if section else ""
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r}{where}")


def _number(section, key, value, *, positive=False, nonnegative=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number")
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{section}.{key} must be positive")
    if nonnegative and value < 0:
        raise ConfigError(f"{section}.{key} must be non-negative")
    return value


def _triple(section, key, value):
    if (not isinstance(value, list) or len(value) != 3
            or any(isinstance(v, bool) or not isinstance(v, (int, float))
                   for v in value)):
        raise ConfigError(f"{section}.{key} must be a list of three numbers")
    return [float(v) for v in value]


def _parse_model(doc):
    _reject_unknown("model", doc, _MODEL_KEYS)
    preset = doc.get("preset", "reference")
    if preset not in _MODEL_PRESETS:
        raise ConfigError(f"model.preset must be one of "
                          f"{sorted(_MODEL_PRESETS)}, got {preset!r}")
    model = _MODEL_PRESETS[preset]()
    kw = {"nuclei": model.nuclei, "g1": model.g1, "g2": model.g2}
    if "nuclei" in doc:
        nuclei = []
        if not isinstance(doc["nuclei"], list):
            raise ConfigError("model.nuclei must be a list of tables")
        for i, entry in enumerate(doc["nuclei"]):
            if not isinstance(entry, dict):
                raise ConfigError("model.nuclei entries must be tables "
                                  "with ax_mev, ay_mev, az_mev")
            _reject_unknown(f"model.nuclei[{i}]", entry, _NUCLEUS_KEYS)
            missing = _NUCLEUS_KEYS - set(entry)
            if missing:
                raise ConfigError(
                    f"model.nuclei[{i}] is missing {sorted(missing)[0]!r}")
            nuclei.append(HyperfineTensor(
                ax_mev=_number("model", f"nuclei[{i}].ax_mev", entry["ax_mev"]),
                ay_mev=_number("model", f"nuclei[{i}].ay_mev", entry["ay_mev"]),
                az_mev=_number("model", f"nuclei[{i}].az_mev", entry["az_mev"])))
        kw["nuclei"] = tuple(nuclei)
    for gkey in ("g1", "g2"):
        if gkey in doc:
            gx, gy, gz = _triple("model", gkey, doc[gkey])
            kw[gkey] = GTensor(gx, gy, gz)
    kw["k"] = _number("model", "k_per_second",
                      doc.get("k_per_second", 1e4), positive=True)
    kw["gamma_noise"] = _number("model", "gamma_noise_per_second",
                                doc.get("gamma_noise_per_second", 0.0),
                                nonnegative=True)
    kw["gamma_z"] = _number("model", "gamma_z_per_second",
                            doc.get("gamma_z_per_second", 0.0),
                            nonnegative=True)
    if len(kw["nuclei"]) > 2:
        raise ConfigError("model.nuclei supports at most two nuclei")
    return ModelSpec(**kw)


def _parse_field(doc):
    _reject_unknown("field", doc, _FIELD_KEYS)
    b0 = _number("field", "b0_tesla", doc.get("b0_tesla", 47e-6),
                 nonnegative=True)
    omega = doc.get("omega_rad_per_second", "resonant")
    if omega == "resonant":
        omega = resonant_omega(b0)
    else:
        omega = _number("field", "omega_rad_per_second", omega, positive=True)
    return FieldSpec(
        b0_tesla=b0,
        theta_static=_number("field", "theta_static_rad",
                             doc.get("theta_static_rad", 0.0)),
        phi_static=_number("field", "phi_static_rad",
                           doc.get("phi_static_rad", 0.0)),
        b_rf_tesla=_number("field", "b_rf_tesla",
                           doc.get("b_rf_tesla", 150e-9), nonnegative=True),
        theta_rf=_number("field", "theta_rf_rad", doc.get("theta_rf_rad", 0.0)),
        phi_rf=_number("field", "phi_rf_rad", doc.get("phi_rf_rad", 0.0)),
        omega=omega,
        rf_phase=_number("field", "rf_phase_rad", doc.get("rf_phase_rad", 0.0)))


def _parse_solver(doc):
    _reject_unknown("solver", doc, _SOLVER_KEYS)
    method = doc.get("method", "rk4-fixed")
    if method not in METHODS:
        raise ConfigError(f"solver.method must be one of {METHODS}")
    t_max = doc.get("t_max_seconds")
    if t_max is not None:
        t_max = _number("solver", "t_max_seconds", t_max, positive=True)
    stride = doc.get("trajectory_stride", 100)
    phases = doc.get("rf_phase_samples", 1)
    for key, val in (("trajectory_stride", stride),
                     ("rf_phase_samples", phases)):
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise ConfigError(f"solver.{key} must be a positive integer")
    store = doc.get("store_trajectory", False)
    if not isinstance(store, bool):
        raise ConfigError("solver.store_trajectory must be a boolean")
    return SolverOptions(
        dt=_number("solver", "dt_seconds", doc.get("dt_seconds", 1e-8),
                   positive=True),
        t_max=t_max,
        residual_eps=_number("solver", "residual_eps",
                             doc.get("residual_eps", 1e-4), positive=True),
        method=method, store_trajectory=store, trajectory_stride=stride,
        rf_phase_samples=phases)


def parse_config(text):
    """Parse and validate a TOML scenario document; returns ScenarioConfig."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    _reject_unknown("", doc, _TOP_KEYS)

    name = doc.get("name", "reference")
    if not isinstance(name, str):
        raise ConfigError("name must be a string")
    channels = doc.get("channels", "decay-only")
    if not isinstance(channels, str) or channels.lstrip("+") not in CHANNEL_CHOICES:
        raise ConfigError(f"channels must be one of {CHANNEL_CHOICES}")
    initial_kind = doc.get("initial_kind", "singlet")
    if initial_kind not in ("singlet", "dephased"):
        raise ConfigError("initial_kind must be 'singlet' or 'dephased'")
    rf_mode = doc.get("rf_mode", "off")
    if rf_mode not in RF_MODES:
        raise ConfigError(f"rf_mode must be one of {RF_MODES}")
    force = doc.get("force_integration", False)
    if not isinstance(force, bool):
        raise ConfigError("force_integration must be a boolean")

    if "angle_grid_rad" in doc:
        grid = doc["angle_grid_rad"]
        if (not isinstance(grid, list) or not grid
                or any(isinstance(v, bool) or not isinstance(v, (int, float))
                       for v in grid)):
            raise ConfigError("angle_grid_rad must be a non-empty list "
                              "of numbers")
        grid = tuple(float(v) for v in grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("angle_grid_rad must be strictly increasing")
        if grid[0] < 0 or grid[-1] > math.pi / 2 + 1e-12:
            raise ConfigError("angle_grid_rad must lie within [0, pi/2]")
    else:
        count = doc.get("angle_count", 91)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError("angle_count must be a positive integer")
        grid = default_angle_grid(count)

    model = _parse_model(doc.get("model", {}))
    field_spec = _parse_field(doc.get("field", {}))
    solver = _parse_solver(doc.get("solver", {}))
    try:
        return ScenarioConfig(name=name, model=model, field_spec=field_spec,
                              solver=solver, angle_grid=grid,
                              channels=channels, initial_kind=initial_kind,
                              rf_mode=rf_mode, force_integration=force)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return parse_config(text)
