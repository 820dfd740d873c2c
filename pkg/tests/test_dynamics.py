import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import analytic_yield, naive_rk4, random_density_matrix
from rpcompass import (FieldSpec, ModelSpec, SolverOptions, evolve,
                       generator_rhs, initial_state, liouvillian_matrix,
                       step_halving_difference, yield_direct)
from rpcompass.channels import active_channels
from rpcompass.dynamics import nu_max_hz
from rpcompass.spin import hamiltonian


def lifted_hamiltonian(m, b):
    h = np.zeros((m.dim_total, m.dim_total), dtype=complex)
    h[:m.dim_spin, :m.dim_spin] = hamiltonian(m, b)
    return h


TIGHT = SolverOptions(t_max=2.5e-3, residual_eps=1e-12)


class TestGeneratorRhs:
    def test_zero_when_commuting_and_no_channels(self, reference_model):
        m = reference_model
        h = lifted_hamiltonian(m, [0, 0, 47e-6])
        w, v = np.linalg.eigh(h)
        rho = v @ np.diag(np.linspace(0.0, 0.2, 10)) @ v.conj().T
        out = generator_rhs(rho, h, [])
        assert np.abs(out).max() < 1e-6  # rad/s scale ~1e7, relative ~1e-13

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_traceless_and_hermitian(self, seed):
        m = ModelSpec.reference(gamma_noise=2e3, gamma_z=1e3)
        b = FieldSpec.static(0.6).static_vector()
        channels = active_channels(m, b)
        rho = random_density_matrix(np.random.default_rng(seed), 10)
        out = generator_rhs(rho, lifted_hamiltonian(m, b), channels)
        assert abs(np.trace(out)) < 1e-4  # entries ~1e7
        assert np.allclose(out, out.conj().T, atol=1e-3)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_matches_superoperator(self, seed):
        # the vectorised generator must reproduce the matrix form exactly
        m = ModelSpec.reference(gamma_noise=1e4, gamma_z=5e3)
        b = FieldSpec.static(1.1).static_vector()
        channels = active_channels(m, b)
        h = lifted_hamiltonian(m, b)
        gen = liouvillian_matrix(h, channels)
        rho = random_density_matrix(np.random.default_rng(seed), 10)
        direct = generator_rhs(rho, h, channels)
        via_super = (gen @ rho.flatten(order="F")).reshape((10, 10), order="F")
        scale = np.abs(direct).max()
        assert np.abs(direct - via_super).max() < 1e-12 * scale


class TestEvolveStatic:
    def test_decoupled_nucleus_gives_unit_singlet_yield(self):
        m = ModelSpec(nuclei=(replace(ModelSpec.reference().nuclei[0],
                                      ax_mev=0, ay_mev=0, az_mev=0),))
        opts = SolverOptions(t_max=12.0 / m.k)
        traj = evolve(initial_state(m), m, FieldSpec.static(0.9), opts)
        assert traj.phi_s == pytest.approx(1.0, abs=opts.residual_eps)

    def test_matches_linear_solve(self, reference_model, static_field):
        phi_s, _ = yield_direct(reference_model, static_field)
        traj = evolve(initial_state(reference_model), reference_model,
                      static_field, TIGHT)
        assert abs(traj.phi_s - phi_s) < 1e-6

    def test_expm_matches_rk4(self, reference_model, static_field):
        rho0 = initial_state(reference_model)
        rk4 = evolve(rho0, reference_model, static_field, TIGHT)
        ex = evolve(rho0, reference_model, static_field,
                    replace(TIGHT, method="expm-piecewise"))
        assert abs(rk4.phi_s - ex.phi_s) < 1e-9

    def test_step_halving(self, reference_model, static_field):
        diff = step_halving_difference(initial_state(reference_model),
                                       reference_model, static_field,
                                       SolverOptions())
        assert diff < 1e-6

    def test_k_dependence_of_reference_curve(self):
        # regression: the static yield is k-independent at the 1e-5 level up
        # to k = 1e4 but genuinely shifts by a few 1e-3 at k = 1e6
        thetas = np.linspace(0.0, math.pi / 2, 13)
        sweeps = {}
        for k in (1e3, 1e4, 1e6):
            m = ModelSpec.reference(k=k)
            sweeps[k] = np.array([yield_direct(m, FieldSpec.static(t))[0]
                                  for t in thetas])
        low = np.abs(sweeps[1e4] - sweeps[1e3]).max()
        high = np.abs(sweeps[1e6] - sweeps[1e3]).max()
        assert low < 3e-5
        assert 2e-3 < high < 6e-3

    def test_trajectory_invariants(self, reference_model, static_field):
        opts = SolverOptions(t_max=8e-4, store_trajectory=True,
                             trajectory_stride=200, method="expm-piecewise")
        traj = evolve(initial_state(reference_model), reference_model,
                      static_field, opts)
        assert traj.times[0] == 0.0
        spin_pop = 1.0 - traj.shelf_s - traj.shelf_t
        assert np.abs(traj.shelf_s + traj.shelf_t + spin_pop - 1.0).max() < 1e-8
        assert traj.meta["max_trace_error"] < 1e-8
        assert traj.meta["min_eigenvalue"] > -1e-8
        assert np.all(np.diff(traj.shelf_s) >= -1e-12)
        assert np.all(np.diff(traj.shelf_t) >= -1e-12)
        # spin population decays exactly as exp(-k t)
        assert np.allclose(spin_pop, np.exp(-reference_model.k * traj.times),
                           atol=1e-9)

    def test_rk4_absorbed_quantities_stay_clean(self, reference_model,
                                                static_field):
        # rk4 trajectories keep trace and shelf series accurate even while
        # the sampled spin coherences drift (flagged via positivity_ok)
        opts = SolverOptions(t_max=8e-4, store_trajectory=True,
                             trajectory_stride=200)
        traj = evolve(initial_state(reference_model), reference_model,
                      static_field, opts)
        assert traj.meta["max_trace_error"] < 1e-10
        assert np.all(np.diff(traj.shelf_s) >= -1e-12)
        assert traj.meta["positivity_ok"] is False
        spin_pop = 1.0 - traj.shelf_s - traj.shelf_t
        assert np.allclose(spin_pop, np.exp(-reference_model.k * traj.times),
                           atol=1e-9)

    def test_positivity_guard_aborts(self, reference_model):
        from rpcompass.dynamics import PositivityError, _Sampler
        sampler = _Sampler(reference_model, store_states=False, abort=True)
        bad = np.zeros((10, 10), dtype=complex)
        bad[0, 0], bad[1, 1] = 1.01, -0.01
        with pytest.raises(PositivityError, match="positivity"):
            sampler.add(1e-6, bad)
        lenient = _Sampler(reference_model, store_states=False, abort=False)
        lenient.add(1e-6, bad)
        assert lenient.min_eigenvalue == pytest.approx(-0.01)

    def test_non_convergence_reported(self, reference_model, static_field):
        opts = SolverOptions(t_max=1e-5, residual_eps=1e-8)
        traj = evolve(initial_state(reference_model), reference_model,
                      static_field, opts)
        assert traj.meta["converged"] is False
        assert traj.residual > opts.residual_eps

    def test_symmetric_about_equator(self, reference_model):
        # axial cigar tensor: Phi_S(theta) = Phi_S(pi - theta)
        for theta in np.linspace(0.05, math.pi / 2, 10):
            up, _ = yield_direct(reference_model, FieldSpec.static(theta))
            dn, _ = yield_direct(reference_model,
                                 FieldSpec.static(math.pi - theta))
            assert abs(up - dn) < 1e-6

    def test_wrong_state_shape_rejected(self, reference_model, static_field):
        with pytest.raises(ValueError, match="initial state"):
            evolve(np.eye(8) / 8, reference_model, static_field)

    def test_dt_resolution_guard(self, reference_model, static_field):
        with pytest.raises(ValueError, match="fastest scale"):
            evolve(initial_state(reference_model), reference_model,
                   static_field, SolverOptions(dt=1e-6))


class TestEvolveRf:
    def test_expm_rejects_rf(self, reference_model):
        f = FieldSpec.with_rf(0.5)
        with pytest.raises(ValueError, match="static"):
            evolve(initial_state(reference_model), reference_model, f,
                   SolverOptions(method="expm-piecewise"))

    def test_fast_path_matches_naive_rk4(self):
        # oracle: a literal stage-by-stage RK4 loop on density matrices
        m = ModelSpec.reference(k=2e5)
        f = FieldSpec.with_rf(0.7)
        opts = SolverOptions(t_max=2e-5, residual_eps=1e-15)
        traj = evolve(initial_state(m), m, f, opts)
        n_sub = traj.meta["rf_substeps"]
        dt = traj.meta["dt"]
        n_steps = traj.meta["n_steps"]
        rho = naive_rk4(initial_state(m), m, f, dt, n_steps)
        assert abs(traj.phi_s - rho[8, 8].real) < 1e-12
        assert abs(traj.phi_t - rho[9, 9].real) < 1e-12
        assert n_sub == math.ceil(2 * math.pi / f.omega / opts.dt)

    def test_static_powering_matches_naive_rk4(self):
        m = ModelSpec.reference(k=2e5)
        f = FieldSpec.static(0.7)
        opts = SolverOptions(t_max=2e-5, residual_eps=1e-15)
        traj = evolve(initial_state(m), m, f, opts)
        rho = naive_rk4(initial_state(m), m, f, opts.dt,
                        traj.meta["n_steps"])
        assert abs(traj.phi_s - rho[8, 8].real) < 1e-12

    def test_trajectory_sampling_on_periods(self, reference_model):
        f = FieldSpec.with_rf(0.4)
        opts = SolverOptions(t_max=3e-4, store_trajectory=True,
                             trajectory_stride=100)
        traj = evolve(initial_state(reference_model), reference_model, f, opts)
        period = 2 * math.pi / f.omega
        n_sub = traj.meta["rf_substeps"]
        dt = traj.meta["dt"]
        assert n_sub * dt == pytest.approx(period, rel=1e-12)
        # interior samples fall on whole periods
        interior = traj.times[1:-1]
        assert np.allclose(np.mod(interior / period + 0.5, 1.0) - 0.5, 0.0,
                           atol=1e-9)
        assert np.all(np.diff(traj.shelf_s) >= -1e-12)

    def test_phase_average_mode(self, reference_model):
        f = FieldSpec.with_rf(0.6, orientation="parallel")
        opts = SolverOptions(t_max=2e-4, rf_phase_samples=4)
        traj = evolve(initial_state(reference_model), reference_model, f, opts)
        assert traj.meta["rf_phase_samples"] == 4
        # the average of the per-phase runs, by construction
        singles = []
        for j in range(4):
            fj = replace(f, rf_phase=2 * math.pi * j / 4)
            singles.append(evolve(initial_state(reference_model),
                                  reference_model, fj,
                                  replace(opts, rf_phase_samples=1)).phi_s)
        assert traj.phi_s == pytest.approx(np.mean(singles), abs=1e-14)


class TestYieldDirect:
    def test_matches_analytic_oracle(self, reference_model):
        for theta in (0.0, 0.3, math.pi / 4, 1.2, math.pi / 2):
            f = FieldSpec.static(theta)
            phi_s, phi_t = yield_direct(reference_model, f)
            assert abs(phi_s - analytic_yield(reference_model, f)) < 1e-12

    def test_total_absorption(self, reference_model):
        for theta in (0.2, 1.0):
            phi_s, phi_t = yield_direct(reference_model,
                                        FieldSpec.static(theta))
            assert abs(phi_s + phi_t - 1.0) < 1e-10

    def test_hyperfine_free_is_pure_singlet(self):
        m = ModelSpec(nuclei=())
        phi_s, _ = yield_direct(m, FieldSpec.static(0.8))
        assert phi_s == pytest.approx(1.0, abs=1e-10)

    def test_rejects_rf(self, reference_model):
        with pytest.raises(ValueError, match="time-independent"):
            yield_direct(reference_model, FieldSpec.with_rf(0.3))

    def test_dephased_initial_kind(self, reference_model, static_field):
        phi_s, phi_t = yield_direct(reference_model, static_field, "dephased")
        assert abs(phi_s + phi_t - 1.0) < 1e-10
        assert phi_s == pytest.approx(
            analytic_yield(reference_model, static_field, "dephased"),
            abs=1e-12)

    def test_noise_channels_included(self, static_field):
        m = ModelSpec.reference(gamma_noise=1e4)
        noisy, _ = yield_direct(m, static_field)
        clean, _ = yield_direct(ModelSpec.reference(), static_field)
        assert abs(noisy - clean) > 1e-3


def test_nu_max_accounts_for_rf(reference_model):
    static = nu_max_hz(reference_model, FieldSpec.static(0.3))
    with_rf = nu_max_hz(reference_model, FieldSpec.with_rf(0.3))
    assert with_rf >= static
    assert static == pytest.approx(1e-5 / (2 * math.pi * 6.58211957e-13),
                                   rel=1e-12)


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(dt=-1e-9)
    with pytest.raises(ValueError):
        SolverOptions(method="euler")
    with pytest.raises(ValueError):
        SolverOptions(residual_eps=0.0)
    with pytest.raises(ValueError):
        SolverOptions(trajectory_stride=0)
    with pytest.raises(ValueError):
        SolverOptions(rf_phase_samples=0)
