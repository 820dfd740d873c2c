"""Angular sweeps, scenario presets and threshold scans.

A scenario fixes the spin model, the field geometry, the enabled noise
channels, the initial state and the solver options; an angular sweep then
computes the singlet/triplet yields over a grid of static-field angles.
Static scenarios use the linear-solve fast path, scenarios with an
oscillatory field (or when integration is forced) use the master-equation
integrator.
"""

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dynamics import SolverOptions, evolve, yield_direct
from .observables import YieldPoint, contrast, rf_disruption
from .spin import FieldSpec, ModelSpec, initial_state

CHANNEL_CHOICES = ("decay-only", "generic-noise", "dephasing", "noise-and-rf")
RF_MODES = ("off", "perpendicular", "parallel", "fixed")


def default_angle_grid(n=91):
    """Uniform grid of n static-field angles covering [0, pi/2]."""
    return tuple(float(t) for t in np.linspace(0.0, math.pi / 2, n))


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete, serialisable description of one sweep scenario."""

    name: str = "reference"
    model: ModelSpec = field(default_factory=ModelSpec.reference)
    field_spec: FieldSpec = field(default_factory=FieldSpec)
    solver: SolverOptions = field(default_factory=SolverOptions)
    angle_grid: tuple = field(default_factory=default_angle_grid)
    channels: str = "decay-only"
    initial_kind: str = "singlet"
    rf_mode: str = "off"
    force_integration: bool = False

    def __post_init__(self):
        object.__setattr__(self, "angle_grid", tuple(self.angle_grid))
        grid = self.angle_grid
        if not grid:
            raise ValueError("angle grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("angle grid must be strictly increasing")
        if grid[0] < 0.0 or grid[-1] > math.pi / 2 + 1e-12:
            raise ValueError("angle grid must lie within [0, pi/2]")
        if self.channels.lstrip("+") not in CHANNEL_CHOICES:
            raise ValueError(f"unknown channel selection {self.channels!r}")
        if self.rf_mode not in RF_MODES:
            raise ValueError(f"unknown rf mode {self.rf_mode!r}")
        if self.initial_kind not in ("singlet", "dephased"):
            raise ValueError(f"unknown initial kind {self.initial_kind!r}")

    @property
    def noise_on(self):
        return self.channels.lstrip("+") in ("generic-noise", "noise-and-rf")

    @property
    def dephasing_on(self):
        return self.channels.lstrip("+") == "dephasing"

    def field_for_angle(self, theta):
        """Field at one grid angle, with the rf axis following rf_mode."""
        f = self.field_spec
        if self.rf_mode == "off":
            return replace(f, theta_static=theta, b_rf_tesla=0.0)
        if self.rf_mode == "perpendicular":
            return replace(f, theta_static=theta, theta_rf=theta + math.pi / 2,
                           phi_rf=f.phi_static)
        if self.rf_mode == "parallel":
            return replace(f, theta_static=theta, theta_rf=theta,
                           phi_rf=f.phi_static)
        return replace(f, theta_static=theta)

    def without_rf(self, suffix="-reference"):
        return replace(self, name=self.name + suffix, rf_mode="off")

    def config_hash(self):
        """Stable hash of the scenario plus solver options."""
        blob = json.dumps(asdict(self), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SweepResult:
    """Ordered yields over the angle grid plus derived metrics."""

    name: str
    points: list
    contrast: float
    provenance: dict
    reference: "SweepResult" = None
    rf_disruption: float = None

    @property
    def thetas(self):
        return np.array([p.theta for p in self.points])

    @property
    def phi_s(self):
        return np.array([p.phi_s for p in self.points])

    @property
    def phi_t(self):
        return np.array([p.phi_t for p in self.points])


def compute_point(cfg, theta):
    """Yield at a single angle; failures become explicit gap points."""
    f = cfg.field_for_angle(theta)
    try:
        if f.has_rf or cfg.force_integration:
            rho0 = initial_state(cfg.model, cfg.initial_kind)
            traj = evolve(rho0, cfg.model, f, cfg.solver,
                          noise=cfg.noise_on, dephasing=cfg.dephasing_on)
            meta = {"method": traj.meta["method"],
                    "residual": traj.residual,
                    "converged": traj.meta["converged"],
                    "max_trace_error": traj.meta["max_trace_error"],
                    "min_eigenvalue": traj.meta["min_eigenvalue"]}
            return YieldPoint(theta, traj.phi_s, traj.phi_t, meta)
        phi_s, phi_t = yield_direct(cfg.model, f, cfg.initial_kind,
                                    noise=cfg.noise_on,
                                    dephasing=cfg.dephasing_on)
        return YieldPoint(theta, phi_s, phi_t, {"method": "linear-solve"})
    except Exception as exc:  # recorded as a gap, the sweep continues
        return YieldPoint(theta, math.nan, math.nan, {"error": str(exc)})


def _point_task(args):
    cfg, theta = args
    return compute_point(cfg, theta)


def angular_sweep(cfg, threads=1):
    """Run the scenario over its angle grid; deterministic point order."""
    tasks = [(cfg, theta) for theta in cfg.angle_grid]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(_point_task, tasks, chunksize=4))
    else:
        points = [compute_point(cfg, theta) for theta in cfg.angle_grid]
    provenance = {"config_hash": cfg.config_hash(),
                  "solver": repr(cfg.solver), "scenario": cfg.name}
    return SweepResult(name=cfg.name, points=points,
                       contrast=contrast(points), provenance=provenance)


def sweep_with_reference(cfg, threads=1):
    """rf scenario plus its static reference; attaches the rf disruption."""
    if cfg.rf_mode == "off":
        raise ValueError("sweep_with_reference needs an rf scenario")
    result = angular_sweep(cfg, threads)
    reference = angular_sweep(cfg.without_rf(), threads)
    result.reference = reference
    result.rf_disruption = rf_disruption(reference.points, result.points)
    return result


@dataclass
class ScanRow:
    value: float
    contrast: float
    rf_disruption: float = None


@dataclass
class ScanResult:
    axis: str
    rows: list
    summary: dict


def threshold_scan(axis, grid, cfg, threads=1):
    """Sweep one rate axis; record contrast and rf disruption per value.

    axis 'k' scans the decay rate, 'gamma_noise' the generic noise rate and
    'gamma_z' the pure-dephasing rate.  The summary reports the largest k
    whose rf disruption is still at least half the maximum over the grid,
    and the smallest rate that halves the zero-rate contrast.
    """
    if axis not in ("k", "gamma_noise", "gamma_z"):
        raise ValueError(f"unknown scan axis {axis!r}")
    grid = [float(g) for g in grid]
    if not grid or any(g <= 0 for g in grid):
        raise ValueError("scan grid must be non-empty and positive")

    rows = []
    for value in grid:
        model = replace(cfg.model, **{axis: value})
        solver = cfg.solver
        if solver.t_max is None:
            # keep the horizon proportional to the lifetime being scanned
            solver = replace(solver, t_max=20.0 / model.k)
        if axis == "gamma_noise":
            scan_cfg = replace(cfg, model=model, solver=solver,
                               channels="generic-noise")
        elif axis == "gamma_z":
            scan_cfg = replace(cfg, model=model, solver=solver,
                               channels="dephasing")
        else:
            scan_cfg = replace(cfg, model=model, solver=solver)
        if scan_cfg.rf_mode != "off":
            swept = sweep_with_reference(scan_cfg, threads)
            rows.append(ScanRow(value, swept.reference.contrast,
                                swept.rf_disruption))
        else:
            swept = angular_sweep(scan_cfg, threads)
            rows.append(ScanRow(value, swept.contrast))

    summary = {}
    disruptions = [r.rf_disruption for r in rows if r.rf_disruption is not None]
    if axis == "k" and disruptions:
        half = max(disruptions) / 2
        eligible = [r.value for r in rows
                    if r.rf_disruption is not None and r.rf_disruption >= half]
        summary["k_half_max_disruption"] = max(eligible)
    if axis in ("gamma_noise", "gamma_z"):
        base_cfg = replace(cfg, model=replace(cfg.model, **{axis: 0.0}),
                           channels="decay-only", rf_mode="off")
        base = angular_sweep(base_cfg, threads).contrast
        summary["contrast_at_zero_rate"] = base
        halving = [r.value for r in rows if r.contrast <= base / 2]
        if halving:
            summary["rate_halving_contrast"] = min(halving)
    return ScanResult(axis=axis, rows=rows, summary=summary)


# --- scenario presets -------------------------------------------------------

FIGURES = ("fig2", "fig3", "fig4", "s-dephasing-field", "s-disc",
           "s-gfactor", "s-2nuclei", "s-noise-field")

RF_K_GRID = (1e3, 1e4, 1e5, 1e6)
NOISE_FRACTIONS = (0.0, 0.01, 0.1, 1.0, 10.0)


def _preset_solver():
    # tighter residual than the defaults so preset yields carry no visible
    # truncation; the rf fast path makes the longer horizon cheap
    return SolverOptions(t_max=None, residual_eps=1e-8)


def rf_sweep_pair(model, name, threads=1, angles=91, phi=0.0,
                  orientation="perpendicular", initial_kind="singlet",
                  channels="decay-only", gamma_z=None, solver=None):
    """One rf-on sweep with its static reference for a given model."""
    if gamma_z is not None:
        model = replace(model, gamma_z=gamma_z)
    solver = solver or _preset_solver()
    if solver.t_max is None:
        solver = replace(solver, t_max=20.0 / model.k)
    cfg = ScenarioConfig(
        name=name, model=model,
        field_spec=FieldSpec.with_rf(0.0, orientation=orientation, phi=phi),
        solver=solver, angle_grid=default_angle_grid(angles),
        channels=channels, initial_kind=initial_kind,
        rf_mode=orientation)
    return sweep_with_reference(cfg, threads)


def static_sweep(model, name, threads=1, angles=91, phi=0.0,
                 channels="decay-only", initial_kind="singlet"):
    cfg = ScenarioConfig(
        name=name, model=model, field_spec=FieldSpec(phi_static=phi),
        solver=_preset_solver(), angle_grid=default_angle_grid(angles),
        channels=channels, initial_kind=initial_kind, rf_mode="off")
    return angular_sweep(cfg, threads)


def _variant_models():
    return {"s-disc": (ModelSpec.disc, math.pi / 2),
            "s-gfactor": (ModelSpec.anisotropic_g, 0.0),
            "s-2nuclei": (ModelSpec.two_nuclei, 0.0)}


def preset_tables(figure, threads=1, angles=91):
    """Compute the data tables for one named figure preset.

    Returns a list of (stem, comments, columns, style) tuples that the
    output layer serialises;  the disc sweep runs in the plane containing
    the oblate tensor's symmetry axis (phi = pi/2), where its angular
    dependence lives.
    """
    if figure == "fig2":
        columns = {}
        grid = None
        for k in RF_K_GRID:
            pair = rf_sweep_pair(ModelSpec.reference(k=k), f"fig2-k{k:g}",
                                 threads, angles)
            grid = pair.thetas
            columns[f"phi_s_ref_k{k:g}"] = pair.reference.phi_s
            columns[f"phi_s_rf_k{k:g}"] = pair.phi_s
        cols = {"theta_rad": grid, **columns}
        comments = ["angular singlet yield, resonant 150 nT rf "
                    "perpendicular to the static field, per decay rate k"]
        return [("fig2", comments, cols,
                 {"kind": "sweep", "reference_offset": 0.001})]

    if figure == "fig3":
        k = 1e4
        columns = {}
        grid = None
        for frac in NOISE_FRACTIONS:
            model = ModelSpec.reference(k=k, gamma_noise=frac * k)
            channels = "decay-only" if frac == 0.0 else "generic-noise"
            sweep = static_sweep(model, f"fig3-gamma{frac:g}k", threads,
                                 angles, channels=channels)
            grid = sweep.thetas
            columns[f"phi_s_gamma{frac:g}k"] = sweep.phi_s
        cols = {"theta_rad": grid, **columns}
        comments = [f"angular singlet yield at k = {k:g}/s for generic noise "
                    "rates Gamma given as multiples of k"]
        return [("fig3", comments, cols, {"kind": "sweep"})]

    if figure == "fig4":
        return [_fig4_table()]

    if figure == "s-dephasing-field":
        k = 1e4
        columns = {}
        grid = None
        reference = None
        for gz in (0.0, 1e3, 1e4, 1e5):
            channels = "decay-only" if gz == 0.0 else "dephasing"
            pair = rf_sweep_pair(ModelSpec.reference(k=k),
                                 f"s-dephasing-field-gz{gz:g}", threads,
                                 angles, channels=channels, gamma_z=gz)
            grid = pair.thetas
            if gz == 0.0:
                reference = pair.reference.phi_s
            columns[f"phi_s_rf_gz{gz:g}"] = pair.phi_s
        cols = {"theta_rad": grid, "phi_s_reference": reference, **columns}
        comments = ["angular singlet yield at k = 1e4/s with resonant rf, "
                    "per pure-dephasing rate Gamma_z; reference is rf off"]
        return [("s-dephasing-field", comments, cols, {"kind": "sweep"})]

    if figure in _variant_models():
        factory, phi = _variant_models()[figure]
        out = []
        columns = {}
        grid = None
        for k in RF_K_GRID:
            pair = rf_sweep_pair(factory(k=k), f"{figure}-k{k:g}", threads,
                                 angles, phi=phi)
            grid = pair.thetas
            columns[f"phi_s_ref_k{k:g}"] = pair.reference.phi_s
            columns[f"phi_s_rf_k{k:g}"] = pair.phi_s
        out.append((f"{figure}_rf",
                    [f"{figure}: rf effect per decay rate k"],
                    {"theta_rad": grid, **columns}, {"kind": "sweep"}))
        k = 1e4
        columns = {}
        for frac in NOISE_FRACTIONS:
            model = factory(k=k, gamma_noise=frac * k)
            channels = "decay-only" if frac == 0.0 else "generic-noise"
            sweep = static_sweep(model, f"{figure}-gamma{frac:g}k", threads,
                                 angles, phi=phi, channels=channels)
            grid = sweep.thetas
            columns[f"phi_s_gamma{frac:g}k"] = sweep.phi_s
        out.append((f"{figure}_noise",
                    [f"{figure}: generic noise effect at k = {k:g}/s"],
                    {"theta_rad": grid, **columns}, {"kind": "sweep"}))
        return out

    if figure == "s-noise-field":
        out = []
        columns = {}
        grid = None
        for k in RF_K_GRID:
            model = ModelSpec.reference(k=k, gamma_noise=0.1 * k)
            pair = rf_sweep_pair(model, f"s-noise-field-k{k:g}", threads,
                                 angles, channels="generic-noise")
            grid = pair.thetas
            columns[f"phi_s_ref_k{k:g}"] = pair.reference.phi_s
            columns[f"phi_s_rf_k{k:g}"] = pair.phi_s
        out.append(("s-noise-field_scaled",
                    ["rf effect with noise Gamma = 0.1 k, per decay rate k"],
                    {"theta_rad": grid, **columns}, {"kind": "sweep"}))
        k = 1e5
        columns = {}
        for frac in (0.01, 0.1, 1.0):
            model = ModelSpec.reference(k=k, gamma_noise=frac * k)
            pair = rf_sweep_pair(model, f"s-noise-field-gamma{frac:g}k",
                                 threads, angles, channels="generic-noise")
            grid = pair.thetas
            columns[f"phi_s_ref_gamma{frac:g}k"] = pair.reference.phi_s
            columns[f"phi_s_rf_gamma{frac:g}k"] = pair.phi_s
        out.append(("s-noise-field_fixedk",
                    [f"rf on/off pairs at k = {k:g}/s per noise rate Gamma"],
                    {"theta_rad": grid, **columns}, {"kind": "sweep"}))
        return out

    raise ValueError(f"unknown figure name {figure!r}; "
                     f"available: {', '.join(FIGURES)}")


def _fig4_table():
    """Negativity against time for several noise rates at theta = pi/4."""
    from .observables import negativity

    k = 1e4
    t_max = 3e-4
    columns = {}
    times = None
    populations = None
    for frac in (0.0, 0.01, 0.1, 1.0):
        model = ModelSpec.reference(k=k, gamma_noise=frac * k)
        f = FieldSpec.static(math.pi / 4)
        opts = SolverOptions(method="expm-piecewise", t_max=t_max,
                             residual_eps=1e-12, store_trajectory=True,
                             trajectory_stride=50)
        traj = evolve(initial_state(model), model, f, opts,
                      noise=frac > 0.0)
        times = traj.times
        populations = 1.0 - traj.shelf_s - traj.shelf_t
        columns[f"negativity_standard_gamma{frac:g}k"] = np.array(
            [negativity(rho, model.n_nuclei) for rho in traj.states])
        columns[f"negativity_paper_gamma{frac:g}k"] = np.array(
            [negativity(rho, model.n_nuclei, convention="paper")
             for rho in traj.states])
    cols = {"time_s": times, "surviving_population": populations, **columns}
    comments = ["negativity of the unnormalised spin block against time at "
                "theta = pi/4, k = 1e4/s, per generic noise rate Gamma"]
    return ("fig4", comments, cols, {"kind": "trajectory"})
