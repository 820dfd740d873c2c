"""Spin operators, Hamiltonians, magnetic fields and initial states.

The model is a radical pair: two electron spins, of which electron 1 is
hyperfine-coupled to zero, one or two spin-1/2 nuclei, in a weak static
magnetic field with an optional oscillatory component.  All spin operators
are Pauli matrices (sigma_z = diag(1, -1)); the factor 1/2 of spin-1/2 is
absorbed into the gyromagnetic ratio, see :mod:`rpcompass.constants`.

Tensor slot order is fixed everywhere: nucleus_1 (x) nucleus_2 (x)
electron_1 (x) electron_2.  Basis labels, embeddings and partial traces all
follow this order.  The full state space appends two shelf levels |S> and
|T> after the spin space; they collect singlet- and triplet-channel decay.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS, mev_to_rad_per_s

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

AXES = ("x", "y", "z")


def pauli(axis):
    """Return the 2x2 Pauli matrix for axis 'x', 'y' or 'z'."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}, expected one of x, y, z")


def embed(op, slot, dims):
    """Tensor `op` into the product space, acting on `slot`, identity elsewhere.

    dims lists the local dimensions in slot order; op must match dims[slot].
    """
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[slot], dims[slot]):
        raise ValueError(
            f"operator of shape {op.shape} does not fit slot {slot} "
            f"with dimension {dims[slot]}"
        )
    out = np.eye(1, dtype=complex)
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == slot else np.eye(d, dtype=complex))
    return out


def singlet_triplet_states():
    """Electron-pair singlet and triplet basis vectors (dimension 4).

    Returns (s, t0, tp, tm) with
        |s>  = (|ud> - |du>) / sqrt(2)
        |t0> = (|ud> + |du>) / sqrt(2)
        |t+> = |uu>,  |t-> = |dd>
    """
    up = np.array([1, 0], dtype=complex)
    dn = np.array([0, 1], dtype=complex)
    s = (np.kron(up, dn) - np.kron(dn, up)) / math.sqrt(2)
    t0 = (np.kron(up, dn) + np.kron(dn, up)) / math.sqrt(2)
    tp = np.kron(up, up)
    tm = np.kron(dn, dn)
    return s, t0, tp, tm


@dataclass(frozen=True)
class HyperfineTensor:
    """Diagonal hyperfine tensor in the molecular frame, couplings in meV."""

    ax_mev: float
    ay_mev: float
    az_mev: float

    @classmethod
    def cigar(cls, az_mev=1e-5):
        """Axially symmetric prolate tensor: az = 1e-5 meV, ax = ay = az/2."""
        return cls(ax_mev=az_mev / 2, ay_mev=az_mev / 2, az_mev=az_mev)

    @classmethod
    def disc(cls, ax_mev=0.5e-5):
        """Oblate tensor: ax = 0.5e-5 meV, ay = ax/6, az = ax.

        Note the symmetry axis of this preset is y, not z: the weak coupling
        is along y while x and z are equal.
        """
        return cls(ax_mev=ax_mev, ay_mev=ax_mev / 6, az_mev=ax_mev)

    def scaled(self, factor):
        return HyperfineTensor(self.ax_mev * factor, self.ay_mev * factor,
                               self.az_mev * factor)

    @property
    def diagonal_mev(self):
        return np.array([self.ax_mev, self.ay_mev, self.az_mev])


@dataclass(frozen=True)
class GTensor:
    """Dimensionless per-axis electron g-factors."""

    gx: float = 2.0
    gy: float = 2.0
    gz: float = 2.0

    @classmethod
    def isotropic(cls, g=2.0):
        return cls(g, g, g)

    @classmethod
    def anisotropic(cls):
        """Strongly anisotropic preset: gz = 0.8*2, gx = gy = 0.3*2."""
        return cls(gx=0.6, gy=0.6, gz=1.6)

    @property
    def diagonal(self):
        return np.array([self.gx, self.gy, self.gz])


@dataclass(frozen=True)
class ModelSpec:
    """Spin system definition: nuclei, g-tensors, decay and noise rates.

    nuclei lists the hyperfine tensors of the 0, 1 or 2 nuclei coupled to
    electron 1.  k is the shelving decay rate, gamma_noise the rate of the
    generic single-electron Pauli noise channels and gamma_z the rate of the
    energy-eigenbasis pure-dephasing channels, all in 1/s.
    """

    nuclei: tuple = (HyperfineTensor.cigar(),)
    g1: GTensor = GTensor.isotropic()
    g2: GTensor = GTensor.isotropic()
    k: float = 1e4
    gamma_noise: float = 0.0
    gamma_z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        if len(self.nuclei) > 2:
            raise ValueError("at most two nuclei are supported")
        if not self.k > 0:
            raise ValueError("decay rate k must be positive")
        if self.gamma_noise < 0 or self.gamma_z < 0:
            raise ValueError("noise rates must be non-negative")

    @property
    def n_nuclei(self):
        return len(self.nuclei)

    @property
    def dims(self):
        """Local dimensions in slot order: nuclei, electron 1, electron 2."""
        return [2] * self.n_nuclei + [2, 2]

    @property
    def dim_spin(self):
        return 4 * 2 ** self.n_nuclei

    @property
    def dim_total(self):
        """Spin space plus the two shelf levels."""
        return self.dim_spin + 2

    @property
    def shelf_s_index(self):
        return self.dim_spin

    @property
    def shelf_t_index(self):
        return self.dim_spin + 1

    # --- presets -----------------------------------------------------------

    @classmethod
    def reference(cls, **kw):
        """One nucleus with the cigar tensor, isotropic g = 2."""
        return cls(nuclei=(HyperfineTensor.cigar(),), **kw)

    @classmethod
    def disc(cls, **kw):
        """One nucleus with the disc (oblate) tensor."""
        return cls(nuclei=(HyperfineTensor.disc(),), **kw)

    @classmethod
    def anisotropic_g(cls, **kw):
        """No nuclei; anisotropy comes from the g-tensor of electron 1."""
        return cls(nuclei=(), g1=GTensor.anisotropic(), **kw)

    @classmethod
    def two_nuclei(cls, **kw):
        """Two parallel cigar tensors with A2 = (2/3) A1."""
        a1 = HyperfineTensor.cigar()
        return cls(nuclei=(a1, a1.scaled(2.0 / 3.0)), **kw)


def resonant_omega(b0_tesla=47e-6, constants=CONSTANTS):
    """Angular frequency resonant with the free-electron Zeeman splitting.

    hbar * omega = 2 * gamma * B0, i.e. nu = omega / 2 pi = 1.316 MHz at
    B0 = 47 uT.
    """
    return mev_to_rad_per_s(2 * constants.gamma_mev_per_tesla * b0_tesla,
                            constants)


@dataclass(frozen=True)
class FieldSpec:
    """Static plus oscillatory magnetic field.

    B(t) = B0 (cos phi sin theta, sin phi sin theta, cos theta)
         + B_rf cos(omega t + rf_phase)
                (cos phi_rf sin theta_rf, sin phi_rf sin theta_rf, cos theta_rf)

    Angles are measured in the hyperfine molecular frame (theta from the
    z axis).  rf_phase defaults to 0 at t = 0.
    """

    b0_tesla: float = 47e-6
    theta_static: float = 0.0
    phi_static: float = 0.0
    b_rf_tesla: float = 0.0
    theta_rf: float = 0.0
    phi_rf: float = 0.0
    omega: float = field(default_factory=resonant_omega)
    rf_phase: float = 0.0

    def __post_init__(self):
        if self.b0_tesla < 0 or self.b_rf_tesla < 0:
            raise ValueError("field amplitudes must be non-negative")

    @property
    def has_rf(self):
        return self.b_rf_tesla > 0

    @classmethod
    def static(cls, theta, phi=0.0, b0_tesla=47e-6):
        return cls(b0_tesla=b0_tesla, theta_static=theta, phi_static=phi)

    @classmethod
    def with_rf(cls, theta, orientation="perpendicular", b0_tesla=47e-6,
                b_rf_tesla=150e-9, phi=0.0, rf_phase=0.0, omega=None):
        """Static field at angle theta plus a resonant oscillatory field.

        orientation 'perpendicular' puts the rf axis in the sweep plane at
        theta + pi/2; 'parallel' aligns it with the static field.
        """
        if orientation == "perpendicular":
            theta_rf = theta + math.pi / 2
        elif orientation == "parallel":
            theta_rf = theta
        else:
            raise ValueError(f"unknown rf orientation {orientation!r}")
        if omega is None:
            omega = resonant_omega(b0_tesla)
        return cls(b0_tesla=b0_tesla, theta_static=theta, phi_static=phi,
                   b_rf_tesla=b_rf_tesla, theta_rf=theta_rf, phi_rf=phi,
                   omega=omega, rf_phase=rf_phase)

    def static_vector(self):
        """Static field component as a 3-vector in tesla."""
        return self.b0_tesla * _unit(self.theta_static, self.phi_static)

    def rf_vector(self):
        """Oscillatory field amplitude vector in tesla (zero if rf is off)."""
        if not self.has_rf:
            return np.zeros(3)
        return self.b_rf_tesla * _unit(self.theta_rf, self.phi_rf)


def _unit(theta, phi):
    return np.array([math.cos(phi) * math.sin(theta),
                     math.sin(phi) * math.sin(theta),
                     math.cos(theta)])


def field_at(f, t):
    """Magnetic field vector in tesla at time t >= 0 (seconds)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    b = f.static_vector()
    if f.has_rf:
        b = b + math.cos(f.omega * t + f.rf_phase) * f.rf_vector()
    return b


def hamiltonian(m, b):
    """Spin Hamiltonian in rad/s for field vector b (tesla).

    H = sum_nuclei sum_a A_a sigma_a(nucleus) sigma_a(electron 1)
      + (mu_B / 2) sum_a b_a (g1_a sigma_a(electron 1) + g2_a sigma_a(electron 2)),
    divided by hbar.  Dimension is 4 * 2^n_nuclei; the shelf levels are not
    included here.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (3,) or not np.all(np.isfinite(b)):
        raise ValueError("field must be a finite 3-vector")
    dims = m.dims
    n = m.n_nuclei
    e1, e2 = n, n + 1
    H = np.zeros((m.dim_spin, m.dim_spin), dtype=complex)
    half_mu = 0.5 * CONSTANTS.bohr_magneton_mev_per_tesla
    for i, ax in enumerate(AXES):
        s1 = embed(_PAULI[ax], e1, dims)
        s2 = embed(_PAULI[ax], e2, dims)
        for j, tensor in enumerate(m.nuclei):
            H += tensor.diagonal_mev[i] * embed(_PAULI[ax], j, dims) @ s1
        H += half_mu * b[i] * (m.g1.diagonal[i] * s1 + m.g2.diagonal[i] * s2)
    return H / CONSTANTS.hbar_mev_s


def rf_hamiltonian(m, f):
    """Zeeman Hamiltonian of the rf amplitude vector alone, in rad/s.

    The Zeeman term is linear in the field, so the full Hamiltonian at time
    t is hamiltonian(m, static) + cos(omega t + phase) * rf_hamiltonian.
    """
    no_hf = ModelSpec(nuclei=tuple(HyperfineTensor(0.0, 0.0, 0.0)
                                   for _ in m.nuclei),
                      g1=m.g1, g2=m.g2, k=m.k)
    return hamiltonian(no_hf, f.rf_vector())


def electron_pair_projectors(m):
    """Singlet and triplet projectors on the spin space.

    Returns (P_S, P_T) with P_S = I_nuclei (x) |s><s| and P_T its complement
    on the spin space.
    """
    s, _, _, _ = singlet_triplet_states()
    p_s = np.kron(np.eye(2 ** m.n_nuclei, dtype=complex), np.outer(s, s.conj()))
    p_t = np.eye(m.dim_spin, dtype=complex) - p_s
    return p_s, p_t


def initial_state(m, kind="singlet"):
    """Initial density matrix on the full space (spin + shelves), trace 1.

    kind 'singlet':  (I_nuclei / 2^n) (x) |s><s|
    kind 'dephased': (I_nuclei / 2^n) (x) (|s><s| + |t0><t0|) / 2
    Shelf populations start at zero.  The nuclear factor is normalised so
    that yields are probabilities.
    """
    s, t0, _, _ = singlet_triplet_states()
    if kind == "singlet":
        rho_e = np.outer(s, s.conj())
    elif kind == "dephased":
        rho_e = 0.5 * (np.outer(s, s.conj()) + np.outer(t0, t0.conj()))
    else:
        raise ValueError(f"unknown initial state kind {kind!r}")
    n = m.n_nuclei
    rho_spin = np.kron(np.eye(2 ** n, dtype=complex) / 2 ** n, rho_e)
    rho = np.zeros((m.dim_total, m.dim_total), dtype=complex)
    rho[:m.dim_spin, :m.dim_spin] = rho_spin
    return rho
