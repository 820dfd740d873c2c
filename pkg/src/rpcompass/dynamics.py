"""Master-equation generator, time evolution and the static-yield fast path.

The equation of motion is

    drho/dt = -i [H(t), rho] + sum_c rate_c (L_c rho L_c^dag
                                             - 1/2 {L_c^dag L_c, rho})

with H in rad/s and the channels from :mod:`rpcompass.channels`.  Because
the shelving projectors satisfy sum P^dag P = k * I on the spin block, the
total spin population decays exactly as exp(-k t); evolution can therefore
stop at a precomputed time once the unabsorbed residual falls below
``residual_eps``.

Integration is fixed-step classical RK4.  The generator is linear in rho,
so one RK4 step is a fixed linear map on the vectorised state; the solver
builds that map once per distinct step and reuses it:

  * static Hamiltonian: a single step matrix, applied via binary powering;
  * oscillatory field: the step maps repeat with the rf period (the step is
    snapped to an integer divisor of the period), so one period propagator
    is accumulated and then powered.

This reproduces the plain step-by-step RK4 recurrence exactly, at a cost
that is essentially independent of the number of steps.  The optional
``expm-piecewise`` method propagates with the exact exponential of the
static generator and is only available without rf.

Accuracy note: at the default step the RK4 map is contractive (spectral
radius 1) and keeps every absorbed quantity (yields, trace, shelf
monotonicity) accurate to ~1e-11, but the phases of the fastest hyperfine
coherences drift by ~(w dt)^5/120 per step.  Intermediate density matrices
can therefore show transient negative eigenvalues of order 1e-2 times the
surviving spin population.  Anything that consumes sampled states (e.g.
negativity curves) should use expm-piecewise, which is exact for static
fields; the positivity guard aborts only under that method, and is
advisory (recorded in meta) under rk4-fixed.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .channels import active_channels
from .constants import CONSTANTS
from .spin import electron_pair_projectors, field_at, hamiltonian, rf_hamiltonian

METHODS = ("rk4-fixed", "expm-piecewise")

# rf-period subdivisions are capped; a slower drive than this is treated by
# direct stepping, a faster one needs a smaller dt anyway
_MAX_SUBSTEPS = 65536


class PositivityError(RuntimeError):
    """Raised when a propagated state develops a significant negative eigenvalue."""

    def __init__(self, t, min_eigenvalue):
        super().__init__(
            f"density matrix lost positivity at t = {t:.6e} s "
            f"(min eigenvalue {min_eigenvalue:.3e})")
        self.t = t
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True)
class SolverOptions:
    """Fixed-step solver configuration.

    dt is an upper bound on the step: with rf on, the actual step is
    T_rf / ceil(T_rf / dt) so that an integer number of steps tiles one rf
    period.  t_max defaults to 12 / k.  Evolution stops early once the
    unabsorbed spin population drops below residual_eps.  Trajectory samples
    are taken every trajectory_stride steps (with rf, rounded up to whole
    periods).  rf_phase_samples > 1 averages the evolution over that many
    uniformly spaced rf phases.
    """

    dt: float = 1e-8
    t_max: float = None
    residual_eps: float = 1e-4
    method: str = "rk4-fixed"
    store_trajectory: bool = False
    trajectory_stride: int = 100
    rf_phase_samples: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max is not None and self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if not 0 < self.residual_eps < 1:
            raise ValueError("residual_eps must be in (0, 1)")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.trajectory_stride < 1:
            raise ValueError("trajectory_stride must be >= 1")
        if self.rf_phase_samples < 1:
            raise ValueError("rf_phase_samples must be >= 1")


@dataclass
class Trajectory:
    """Sampled evolution: times, shelf populations, singlet probability.

    states holds the sampled full density matrices when requested.  The
    final shelf populations are the singlet and triplet yields.
    """

    times: np.ndarray
    shelf_s: np.ndarray
    shelf_t: np.ndarray
    singlet_prob: np.ndarray
    states: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def phi_s(self):
        return float(self.shelf_s[-1])

    @property
    def phi_t(self):
        return float(self.shelf_t[-1])

    @property
    def residual(self):
        return 1.0 - self.phi_s - self.phi_t


def nu_max_hz(m, f):
    """Fastest frequency scale of the problem in Hz.

    Considers every hyperfine coupling, the electron Zeeman splittings in
    the combined static + rf amplitude, and the rf drive frequency.
    """
    h_mev_s = 2 * math.pi * CONSTANTS.hbar_mev_s
    scales = [abs(a) / h_mev_s
              for t in m.nuclei for a in t.diagonal_mev]
    b_tot = f.b0_tesla + f.b_rf_tesla
    g_max = max(max(abs(m.g1.diagonal)), max(abs(m.g2.diagonal)))
    scales.append(g_max * CONSTANTS.bohr_magneton_mev_per_tesla * b_tot / h_mev_s)
    if f.has_rf:
        scales.append(f.omega / (2 * math.pi))
    return max(scales)


def commutator_superoperator(h):
    """Matrix of rho -> -i [h, rho] acting on column-stacked rho."""
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator_superoperator(op):
    """Matrix of rho -> op rho op^dag - 1/2 {op^dag op, rho} (column stacking)."""
    d = op.shape[0]
    eye = np.eye(d, dtype=complex)
    opd_op = op.conj().T @ op
    return (np.kron(op.conj(), op)
            - 0.5 * np.kron(eye, opd_op)
            - 0.5 * np.kron(opd_op.T, eye))


def liouvillian_matrix(h_full, channels):
    """Full generator as a d^2 x d^2 matrix over column-stacked states."""
    gen = commutator_superoperator(h_full)
    for op, rate, _ in channels:
        if rate != 0.0:
            gen += rate * dissipator_superoperator(op)
    return gen


def generator_rhs(rho, h_full, channels):
    """Right-hand side of the master equation in matrix form.

    h_full must be the spin Hamiltonian zero-extended to the shelf levels,
    in rad/s.  The output is Hermitian and traceless for Hermitian rho.
    """
    out = -1j * (h_full @ rho - rho @ h_full)
    for op, rate, _ in channels:
        if rate == 0.0:
            continue
        op_rho = op @ rho
        opd_op = op.conj().T @ op
        out += rate * (op_rho @ op.conj().T
                       - 0.5 * (opd_op @ rho + rho @ opd_op))
    return out


def _lift_hamiltonian(m, h_spin):
    h = np.zeros((m.dim_total, m.dim_total), dtype=complex)
    h[:m.dim_spin, :m.dim_spin] = h_spin
    return h


def _rk4_step_matrix(gen_a, gen_b, gen_c, dt):
    """Linear map of one classical RK4 step for v' = L(t) v.

    gen_a, gen_b, gen_c are the generators at t, t + dt/2 and t + dt.
    """
    n = gen_a.shape[0]
    eye = np.eye(n, dtype=complex)
    k1 = gen_a
    k2 = gen_b @ (eye + 0.5 * dt * k1)
    k3 = gen_b @ (eye + 0.5 * dt * k2)
    k4 = gen_c @ (eye + dt * k3)
    return eye + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _apply_power(mat, power, vec):
    """mat**power @ vec by binary powering (power >= 0)."""
    out = vec
    base = mat
    n = power
    while n:
        if n & 1:
            out = base @ out
        n >>= 1
        if n:
            base = base @ base
    return out


class _Sampler:
    """Accumulates trajectory samples and watches state sanity.

    With abort=True a sampled eigenvalue below -1e-6 raises PositivityError;
    otherwise the worst value is only recorded (rk4-fixed states carry the
    documented coherence-phase envelope, so the guard is advisory there).
    """

    def __init__(self, m, store_states, abort):
        self.m = m
        p_s, _ = electron_pair_projectors(m)
        self._p_s = p_s
        self.store_states = store_states
        self.abort = abort
        self.times = []
        self.shelf_s = []
        self.shelf_t = []
        self.singlet_prob = []
        self.states = [] if store_states else None
        self.max_trace_error = 0.0
        self.min_eigenvalue = np.inf

    def add(self, t, rho):
        m = self.m
        self.times.append(t)
        self.shelf_s.append(float(rho[m.shelf_s_index, m.shelf_s_index].real))
        self.shelf_t.append(float(rho[m.shelf_t_index, m.shelf_t_index].real))
        spin = rho[:m.dim_spin, :m.dim_spin]
        self.singlet_prob.append(float(np.trace(self._p_s @ spin).real))
        self.max_trace_error = max(self.max_trace_error,
                                   abs(np.trace(rho).real - 1.0))
        w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        self.min_eigenvalue = min(self.min_eigenvalue, float(w[0]))
        if self.abort and w[0] < -1e-6:
            raise PositivityError(t, float(w[0]))
        if self.store_states:
            self.states.append(rho.copy())

    def finish(self, meta):
        meta = dict(meta, max_trace_error=self.max_trace_error,
                    min_eigenvalue=self.min_eigenvalue,
                    positivity_ok=self.min_eigenvalue > -1e-6)
        states = np.array(self.states) if self.store_states else None
        return Trajectory(times=np.asarray(self.times),
                          shelf_s=np.asarray(self.shelf_s),
                          shelf_t=np.asarray(self.shelf_t),
                          singlet_prob=np.asarray(self.singlet_prob),
                          states=states, meta=meta)


def _stop_time(m, opts):
    """Evolution horizon: min(t_max, analytic residual time), plus status.

    The spin population is exactly exp(-k t), so the residual threshold is
    reached at ln(1 / residual_eps) / k without monitoring.
    """
    t_max = opts.t_max if opts.t_max is not None else 12.0 / m.k
    t_res = math.log(1.0 / opts.residual_eps) / m.k
    t_end = min(t_max, t_res)
    converged = t_res <= t_max
    return t_end, t_max, converged


def evolve(rho0, m, f, opts=SolverOptions(), *, noise=None, dephasing=None):
    """Propagate rho0 under the full master equation; returns a Trajectory.

    The Hamiltonian is hamiltonian(m, field_at(f, t)); channels are the
    shelving projectors plus, when enabled, the generic noise and dephasing
    channels (built at the static field).  noise / dephasing default to 'on
    when the corresponding rate is positive'.

    Yields are the final shelf populations.  meta records the method, the
    effective step, the residual, a convergence flag and the worst sampled
    eigenvalue.  A sampled eigenvalue beyond -1e-6 raises PositivityError
    under expm-piecewise (an exact propagator, so a violation is a real
    pathology); under rk4-fixed it is recorded in meta (positivity_ok), see
    the module note on state fidelity.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = m.dim_total
    if rho0.shape != (d, d):
        raise ValueError(f"initial state must be {d}x{d} for this model")
    nu = nu_max_hz(m, f)
    if opts.dt > 1.0 / (20.0 * nu):
        raise ValueError(
            f"dt = {opts.dt:.3e} s does not resolve the fastest scale "
            f"{nu:.3e} Hz; need dt <= {1.0 / (20.0 * nu):.3e} s")
    if opts.method == "expm-piecewise" and f.has_rf:
        raise ValueError("expm-piecewise is only available for static fields")

    if f.has_rf and opts.rf_phase_samples > 1:
        return _evolve_phase_averaged(rho0, m, f, opts,
                                      noise=noise, dephasing=dephasing)

    b_static = f.static_vector()
    channels = active_channels(m, b_static, noise=noise, dephasing=dephasing)
    h0 = _lift_hamiltonian(m, hamiltonian(m, b_static))
    gen0 = liouvillian_matrix(h0, channels)
    t_end, t_max, converged = _stop_time(m, opts)
    v0 = rho0.flatten(order="F")

    if not f.has_rf:
        traj = _propagate_static(m, gen0, v0, t_end, opts)
    else:
        h1 = _lift_hamiltonian(m, rf_hamiltonian(m, f))
        gen1 = commutator_superoperator(h1)
        traj = _propagate_periodic(m, gen0, gen1, f.omega, f.rf_phase,
                                   v0, t_end, opts)
    traj.meta.update(converged=converged, t_max=t_max,
                     residual=traj.residual, rf_phase=f.rf_phase)
    return traj


def _propagate_static(m, gen, v0, t_end, opts):
    dt = opts.dt
    n_steps = max(1, math.ceil(t_end / dt))
    if opts.method == "expm-piecewise":
        step = scipy.linalg.expm(gen * dt)
    else:
        step = _rk4_step_matrix(gen, gen, gen, dt)
    meta = {"method": opts.method, "dt": dt, "n_steps": n_steps,
            "t_end": n_steps * dt}
    sampler = _Sampler(m, opts.store_trajectory,
                       abort=opts.method == "expm-piecewise")
    d = m.dim_total
    if not opts.store_trajectory:
        v = _apply_power(step, n_steps, v0)
        sampler.add(n_steps * dt, v.reshape((d, d), order="F"))
        return sampler.finish(meta)
    stride = min(opts.trajectory_stride, n_steps)
    step_s = np.linalg.matrix_power(step, stride)
    v = v0
    sampler.add(0.0, v.reshape((d, d), order="F"))
    done = 0
    while done + stride <= n_steps:
        v = step_s @ v
        done += stride
        sampler.add(done * dt, v.reshape((d, d), order="F"))
    if done < n_steps:
        v = _apply_power(step, n_steps - done, v)
        sampler.add(n_steps * dt, v.reshape((d, d), order="F"))
    return sampler.finish(meta)


def _rf_step_matrices(gen0, gen1, omega, phase, dt, n_sub):
    """RK4 step maps for the n_sub substeps tiling one rf period."""
    mats = []
    for j in range(n_sub):
        t0 = j * dt
        ca = math.cos(omega * t0 + phase)
        cb = math.cos(omega * (t0 + 0.5 * dt) + phase)
        cc = math.cos(omega * (t0 + dt) + phase)
        mats.append(_rk4_step_matrix(gen0 + ca * gen1, gen0 + cb * gen1,
                                     gen0 + cc * gen1, dt))
    return mats


def _propagate_periodic(m, gen0, gen1, omega, phase, v0, t_end, opts):
    period = 2 * math.pi / omega
    n_sub = math.ceil(period / opts.dt)
    if n_sub > _MAX_SUBSTEPS:
        raise ValueError("rf period requires too many substeps; increase dt "
                         "or treat the drive as static")
    dt = period / n_sub
    n_steps = max(1, math.ceil(t_end / dt))
    steps = _rf_step_matrices(gen0, gen1, omega, phase, dt, n_sub)
    meta = {"method": opts.method, "dt": dt, "n_steps": n_steps,
            "t_end": n_steps * dt, "rf_substeps": n_sub}
    sampler = _Sampler(m, opts.store_trajectory, abort=False)
    d = m.dim_total

    u_period = np.eye(gen0.shape[0], dtype=complex)
    for mat in steps:
        u_period = mat @ u_period
    n_periods, rem = divmod(n_steps, n_sub)

    if not opts.store_trajectory:
        v = _apply_power(u_period, n_periods, v0)
        for j in range(rem):
            v = steps[j] @ v
        sampler.add(n_steps * dt, v.reshape((d, d), order="F"))
        return sampler.finish(meta)

    # sample on whole periods, at least trajectory_stride substeps apart
    stride_periods = max(1, math.ceil(opts.trajectory_stride / n_sub))
    u_stride = np.linalg.matrix_power(u_period, stride_periods)
    v = v0
    sampler.add(0.0, v.reshape((d, d), order="F"))
    done = 0
    while done + stride_periods <= n_periods:
        v = u_stride @ v
        done += stride_periods
        sampler.add(done * n_sub * dt, v.reshape((d, d), order="F"))
    for _ in range(n_periods - done):
        v = u_period @ v
    for j in range(rem):
        v = steps[j] @ v
    sampler.add(n_steps * dt, v.reshape((d, d), order="F"))
    return sampler.finish(meta)


def _evolve_phase_averaged(rho0, m, f, opts, *, noise, dephasing):
    """Uniform average of the evolution over rf_phase_samples rf phases."""
    n = opts.rf_phase_samples
    single = replace(opts, rf_phase_samples=1)
    trajs = []
    for j in range(n):
        f_j = replace(f, rf_phase=f.rf_phase + 2 * math.pi * j / n)
        trajs.append(evolve(rho0, m, f_j, single,
                            noise=noise, dephasing=dephasing))
    first = trajs[0]
    worst = min(t.meta["min_eigenvalue"] for t in trajs)
    meta = dict(first.meta, rf_phase_samples=n, rf_phase=f.rf_phase,
                max_trace_error=max(t.meta["max_trace_error"] for t in trajs),
                min_eigenvalue=worst, positivity_ok=worst > -1e-6)
    states = None
    if first.states is not None:
        states = sum(t.states for t in trajs) / n
    return Trajectory(
        times=first.times,
        shelf_s=sum(t.shelf_s for t in trajs) / n,
        shelf_t=sum(t.shelf_t for t in trajs) / n,
        singlet_prob=sum(t.singlet_prob for t in trajs) / n,
        states=states, meta=meta)


def yield_direct(m, f, kind="singlet", *, noise=None, dephasing=None):
    """Singlet and triplet yields of a static scenario by one linear solve.

    On the spin block the shelving decay acts as a uniform drain -k rho, so
    the time-integrated spin state sigma = int_0^inf rho_spin dt solves

        L_spin sigma = -rho_spin(0),

    which is never singular for k > 0.  The yields are the shelving rates
    contracted with sigma: Phi_S = k tr(P_S sigma), Phi_T = k tr(P_T sigma).
    Exact up to the linear solve; no time truncation.
    """
    if f.has_rf:
        raise ValueError("yield_direct requires a time-independent "
                         "Hamiltonian (b_rf = 0)")
    from .spin import initial_state

    b_static = f.static_vector()
    d_spin = m.dim_spin
    h_spin = hamiltonian(m, b_static)
    gen = commutator_superoperator(h_spin)
    gen -= m.k * np.eye(d_spin * d_spin)
    for op, rate, label in active_channels(m, b_static, noise=noise,
                                           dephasing=dephasing):
        if label.startswith("shelve") or rate == 0.0:
            continue
        gen += rate * dissipator_superoperator(op[:d_spin, :d_spin])
    rho0 = initial_state(m, kind)[:d_spin, :d_spin]
    try:
        sigma = np.linalg.solve(gen, -rho0.flatten(order="F"))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "singular spin-block generator; this indicates a zero decay "
            "rate in the model") from exc
    sigma = sigma.reshape((d_spin, d_spin), order="F")
    p_s, p_t = electron_pair_projectors(m)
    phi_s = m.k * float(np.trace(p_s @ sigma).real)
    phi_t = m.k * float(np.trace(p_t @ sigma).real)
    return phi_s, phi_t


def coherent_trajectory(m, f, t_end, dt, kind="singlet"):
    """Decay-free unitary evolution, sampled exactly on a uniform grid.

    Diagonalises the static Hamiltonian once and evaluates the singlet
    probability <s| Tr_nuclei rho(t) |s> analytically at every sample; no
    stepping error.  Shelf populations are identically zero.  Used as the
    integrand source for the yield integral.
    """
    if f.has_rf:
        raise ValueError("coherent_trajectory requires a static field")
    from .spin import initial_state

    h_spin = hamiltonian(m, f.static_vector())
    w, vecs = np.linalg.eigh(h_spin)
    d_spin = m.dim_spin
    rho0 = initial_state(m, kind)[:d_spin, :d_spin]
    p_s, _ = electron_pair_projectors(m)
    rho_e = vecs.conj().T @ rho0 @ vecs
    p_e = vecs.conj().T @ p_s @ vecs
    weights = (p_e.T * rho_e).flatten()
    freqs = (w[:, None] - w[None, :]).flatten()

    n = max(1, math.ceil(t_end / dt))
    times = np.arange(n + 1) * dt
    prob = np.empty(n + 1)
    chunk = max(1, (1 << 20) // weights.size)
    for i in range(0, times.size, chunk):
        t_block = times[i:i + chunk]
        prob[i:i + chunk] = np.real(
            np.exp(-1j * np.outer(t_block, freqs)) @ weights)
    zeros = np.zeros_like(prob)
    return Trajectory(times=times, shelf_s=zeros, shelf_t=zeros.copy(),
                      singlet_prob=prob,
                      meta={"method": "eigen-coherent", "dt": dt,
                            "t_end": float(times[-1])})


def step_halving_difference(rho0, m, f, opts=SolverOptions(), **kw):
    """Convergence diagnostic: |Phi_S(dt) - Phi_S(dt/2)|."""
    t1 = evolve(rho0, m, f, opts, **kw)
    t2 = evolve(rho0, m, f, replace(opts, dt=opts.dt / 2), **kw)
    return abs(t1.phi_s - t2.phi_s)
