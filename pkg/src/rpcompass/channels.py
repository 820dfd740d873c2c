"""Lindblad jump operators: shelving decay, generic noise, pure dephasing.

All operators returned here act on the full space (spin block plus the two
shelf levels).  Noise and dephasing operators are zero on the shelf
rows/columns: decayed products are chemically fixed and no longer noisy.
Only the shelving projectors connect the spin block to the shelves.
"""

from typing import NamedTuple

import numpy as np

from .constants import CONSTANTS
from .spin import _PAULI, AXES, embed, hamiltonian, singlet_triplet_states


class Channel(NamedTuple):
    operator: np.ndarray      # full-space matrix (dim_total x dim_total)
    rate: float               # 1/s
    label: str


def _lift(m, op_spin):
    """Zero-extend a spin-space operator to the full space."""
    full = np.zeros((m.dim_total, m.dim_total), dtype=complex)
    full[:m.dim_spin, :m.dim_spin] = op_spin
    return full


def shelving_projectors(m):
    """Decay channels |S><s,n| and |T><t_j,n| for every nuclear basis state n.

    All 4 * 2^n_nuclei projectors share the same rate k.  Their completeness
    sum P_i^dag P_i equals the identity on the spin block, so the total spin
    population decays exactly as exp(-k t).
    """
    s, t0, tp, tm = singlet_triplet_states()
    electron_states = (("s", s, m.shelf_s_index), ("t0", t0, m.shelf_t_index),
                       ("t+", tp, m.shelf_t_index), ("t-", tm, m.shelf_t_index))
    channels = []
    n_nuc = 2 ** m.n_nuclei
    for n in range(n_nuc):
        e_n = np.zeros(n_nuc, dtype=complex)
        e_n[n] = 1.0
        for name, vec, shelf in electron_states:
            state = np.kron(e_n, vec)
            op = np.zeros((m.dim_total, m.dim_total), dtype=complex)
            op[shelf, :m.dim_spin] = state.conj()
            channels.append(Channel(op, m.k, f"shelve[{name},n={n}]"))
    return channels


def generic_noise_channels(m):
    """Six single-electron Pauli noise channels, all at rate gamma_noise.

    The operators are sigma_x, sigma_y, sigma_z on each electron separately,
    tensored with identities on the other spins.
    """
    dims = m.dims
    channels = []
    for which, slot in (("e1", m.n_nuclei), ("e2", m.n_nuclei + 1)):
        for ax in AXES:
            op = _lift(m, embed(_PAULI[ax], slot, dims))
            channels.append(Channel(op, m.gamma_noise, f"noise[{which},{ax}]"))
    return channels


def _level_projectors(h, rel_tol=1e-9):
    """Eigen-projectors of a Hermitian matrix, grouping degenerate levels.

    Grouping by eigenvalue (rather than per eigenvector) keeps the dephasing
    dissipator invariant under basis rotations inside a degenerate subspace.
    """
    w, v = np.linalg.eigh(h)
    scale = max(abs(w[0]), abs(w[-1]), 1.0)
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[start] > rel_tol * scale:
            vecs = v[:, start:i]
            groups.append(vecs @ vecs.conj().T)
            start = i
    return groups


def dephasing_channels(m, b):
    """Energy-conserving dephasing channels for the static field vector b.

    The remote electron and the (nuclei + electron 1) subsystem are treated
    separately.  For each energy level of a subsystem Hamiltonian the jump
    operator is

        Z = (I_sub - 2 P_level) / sqrt(2),

    embedded into the full space; all rates are gamma_z.  Each Z commutes
    with its subsystem Hamiltonian, so these channels destroy coherence
    between energy levels without transferring population.  Generic fields
    give 2 + 2^(n_nuclei + 1) operators (6 for one nucleus).
    """
    half_mu = 0.5 * CONSTANTS.bohr_magneton_mev_per_tesla / CONSTANTS.hbar_mev_s
    b = np.asarray(b, dtype=float)
    dims = m.dims
    n = m.n_nuclei
    channels = []

    # remote electron: its Zeeman Hamiltonian alone
    h2 = sum(half_mu * m.g2.diagonal[i] * b[i] * _PAULI[ax]
             for i, ax in enumerate(AXES))
    eye2 = np.eye(2, dtype=complex)
    for j, proj in enumerate(_level_projectors(h2)):
        z = (eye2 - 2 * proj) / np.sqrt(2)
        channels.append(Channel(_lift(m, embed(z, n + 1, dims)),
                                m.gamma_z, f"dephase[e2,{j}]"))

    # nuclei + electron 1: hyperfine plus electron-1 Zeeman
    sub_dims = dims[:n + 1]
    d_sub = 2 ** (n + 1)
    h_sub = np.zeros((d_sub, d_sub), dtype=complex)
    for i, ax in enumerate(AXES):
        s1 = embed(_PAULI[ax], n, sub_dims)
        for jn, tensor in enumerate(m.nuclei):
            h_sub += (tensor.diagonal_mev[i] / CONSTANTS.hbar_mev_s
                      * embed(_PAULI[ax], jn, sub_dims) @ s1)
        h_sub += half_mu * m.g1.diagonal[i] * b[i] * s1
    eye_sub = np.eye(d_sub, dtype=complex)
    for j, proj in enumerate(_level_projectors(h_sub)):
        z = (eye_sub - 2 * proj) / np.sqrt(2)
        channels.append(Channel(_lift(m, np.kron(z, eye2)),
                                m.gamma_z, f"dephase[e1n,{j}]"))
    return channels


def active_channels(m, b, noise=None, dephasing=None):
    """Collect the enabled channels for a model at static field b.

    noise / dephasing default to 'on whenever the corresponding rate is
    positive'.  Shelving decay is always included.
    """
    if noise is None:
        noise = m.gamma_noise > 0
    if dephasing is None:
        dephasing = m.gamma_z > 0
    channels = shelving_projectors(m)
    if noise:
        channels += generic_noise_channels(m)
    if dephasing:
        channels += dephasing_channels(m, b)
    return channels
