"""Radical-pair compass simulator.

Spin Hamiltonians for a two-electron radical pair with anisotropic
hyperfine coupling, master-equation evolution with singlet/triplet shelving
decay and configurable Lindblad noise, and the derived observables: singlet
yield, angular contrast, rf disruption and entanglement negativity.
"""

__version__ = "0.1.0"

from .channels import (Channel, dephasing_channels, generic_noise_channels,
                       shelving_projectors)
from .config import ConfigError, load_config, parse_config
from .constants import CONSTANTS, PhysicalConstants, mev_to_rad_per_s, \
    rad_per_s_to_mev
from .dynamics import (PositivityError, SolverOptions, Trajectory,
                       coherent_trajectory, evolve, generator_rhs,
                       liouvillian_matrix, step_halving_difference,
                       yield_direct)
from .experiments import (FIGURES, ScanResult, ScenarioConfig, SweepResult,
                          angular_sweep, default_angle_grid, preset_tables,
                          sweep_with_reference, threshold_scan)
from .observables import (YieldPoint, contrast, negativity,
                          partial_transpose_remote, rf_disruption,
                          singlet_probability, yield_integral)
from .output import Table, read_csv, render_plot, write_csv
from .spin import (FieldSpec, GTensor, HyperfineTensor, ModelSpec, embed,
                   field_at, hamiltonian, initial_state, pauli,
                   resonant_omega, singlet_triplet_states)

__all__ = [
    "CONSTANTS", "Channel", "ConfigError", "FIGURES", "FieldSpec", "GTensor",
    "HyperfineTensor", "ModelSpec", "PhysicalConstants", "PositivityError",
    "ScanResult", "ScenarioConfig", "SolverOptions", "SweepResult", "Table",
    "Trajectory", "YieldPoint", "angular_sweep", "coherent_trajectory",
    "contrast", "default_angle_grid", "dephasing_channels", "embed",
    "evolve", "field_at", "generator_rhs", "generic_noise_channels",
    "hamiltonian", "initial_state", "liouvillian_matrix", "load_config",
    "mev_to_rad_per_s", "negativity", "parse_config",
    "partial_transpose_remote", "pauli", "preset_tables",
    "rad_per_s_to_mev", "read_csv", "render_plot", "resonant_omega",
    "rf_disruption", "shelving_projectors", "singlet_probability",
    "singlet_triplet_states", "step_halving_difference",
    "sweep_with_reference", "threshold_scan", "write_csv", "yield_direct",
    "yield_integral",
]
