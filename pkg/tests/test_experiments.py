import math
from dataclasses import replace

import numpy as np
import pytest

from rpcompass import (FieldSpec, ModelSpec, ScenarioConfig, SolverOptions,
                       angular_sweep, default_angle_grid, preset_tables,
                       sweep_with_reference, threshold_scan, write_csv)
from rpcompass.experiments import compute_point, static_sweep
from rpcompass.output import sweep_table


def static_cfg(**kw):
    defaults = dict(name="test", angle_grid=default_angle_grid(31))
    defaults.update(kw)
    return ScenarioConfig(**defaults)


class TestScenarioConfig:
    def test_angle_grid_must_increase(self):
        with pytest.raises(ValueError, match="increasing"):
            ScenarioConfig(angle_grid=(0.0, 0.5, 0.5))

    def test_angle_grid_range(self):
        with pytest.raises(ValueError, match="0, pi/2"):
            ScenarioConfig(angle_grid=(0.0, 2.0))

    def test_channel_validation(self):
        with pytest.raises(ValueError, match="channel"):
            ScenarioConfig(channels="white-noise")
        assert ScenarioConfig(channels="+generic-noise").noise_on

    def test_rf_mode_validation(self):
        with pytest.raises(ValueError, match="rf mode"):
            ScenarioConfig(rf_mode="circular")

    def test_field_for_angle_orientations(self):
        cfg = ScenarioConfig(rf_mode="perpendicular",
                             field_spec=FieldSpec(b_rf_tesla=150e-9))
        f = cfg.field_for_angle(0.3)
        assert f.theta_static == 0.3
        assert f.theta_rf == pytest.approx(0.3 + math.pi / 2)
        cfg_par = replace(cfg, rf_mode="parallel")
        assert cfg_par.field_for_angle(0.3).theta_rf == 0.3
        cfg_off = replace(cfg, rf_mode="off")
        assert not cfg_off.field_for_angle(0.3).has_rf

    def test_hash_stable_and_sensitive(self):
        a, b = static_cfg(), static_cfg()
        assert a.config_hash() == b.config_hash()
        c = static_cfg(model=ModelSpec.reference(k=2e4))
        assert a.config_hash() != c.config_hash()


class TestAngularSweep:
    def test_single_angle(self):
        res = angular_sweep(ScenarioConfig(angle_grid=(0.4,)))
        assert len(res.points) == 1
        assert res.contrast == 0.0

    def test_reference_curve_has_contrast(self):
        # decay-only cigar sweep: the hyperfine anisotropy gives a usable
        # angular signal
        res = angular_sweep(static_cfg(angle_grid=default_angle_grid(100)))
        assert res.contrast > 0.05
        assert np.all(np.diff(res.thetas) > 0)

    def test_noise_crushes_contrast(self):
        clean = angular_sweep(static_cfg())
        noisy = angular_sweep(static_cfg(
            model=ModelSpec.reference(gamma_noise=1e5),
            channels="generic-noise"))
        assert noisy.contrast < 0.5 * clean.contrast

    def test_deterministic_csv(self, tmp_path):
        cfg = static_cfg(angle_grid=default_angle_grid(11))
        p1 = write_csv(sweep_table(angular_sweep(cfg)), tmp_path / "a.csv")
        p2 = write_csv(sweep_table(angular_sweep(cfg)), tmp_path / "b.csv")
        assert p1.read_bytes() == p2.read_bytes()

    def test_failed_angles_marked_not_fatal(self):
        # force integration with an unresolvable step: every point fails but
        # the sweep itself completes with explicit gaps
        cfg = static_cfg(angle_grid=(0.1, 0.2), force_integration=True,
                         solver=SolverOptions(dt=1e-6))
        res = angular_sweep(cfg)
        assert len(res.points) == 2
        assert all(not p.ok for p in res.points)
        assert all("error" in p.meta for p in res.points)
        assert math.isnan(res.contrast)

    def test_parallel_matches_serial(self):
        cfg = static_cfg(angle_grid=default_angle_grid(7))
        serial = angular_sweep(cfg, threads=1)
        parallel = angular_sweep(cfg, threads=2)
        assert np.array_equal(serial.phi_s, parallel.phi_s)

    def test_linear_solve_used_for_static(self):
        point = compute_point(static_cfg(), 0.5)
        assert point.meta["method"] == "linear-solve"

    def test_integration_used_for_rf(self):
        cfg = static_cfg(rf_mode="perpendicular",
                         field_spec=FieldSpec(b_rf_tesla=150e-9),
                         model=ModelSpec.reference(k=1e5),
                         solver=SolverOptions(t_max=1.5e-4))
        point = compute_point(cfg, 0.5)
        assert point.meta["method"] == "rk4-fixed"
        assert point.ok


class TestSweepWithReference:
    def test_attaches_disruption(self):
        cfg = static_cfg(rf_mode="perpendicular",
                         field_spec=FieldSpec(b_rf_tesla=150e-9),
                         model=ModelSpec.reference(k=1e5),
                         solver=SolverOptions(t_max=1.6e-4),
                         angle_grid=default_angle_grid(5))
        pair = sweep_with_reference(cfg)
        assert pair.reference is not None
        assert pair.rf_disruption >= 0.0
        assert pair.reference.points[0].meta["method"] == "linear-solve"

    def test_requires_rf(self):
        with pytest.raises(ValueError, match="rf"):
            sweep_with_reference(static_cfg())


class TestThresholdScan:
    def test_contrast_monotone_in_noise(self):
        cfg = static_cfg(angle_grid=default_angle_grid(9))
        scan = threshold_scan("gamma_noise", [1e2, 1e3, 1e4, 1e5], cfg)
        values = [r.contrast for r in scan.rows]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
        assert scan.summary["rate_halving_contrast"] <= 1e4

    def test_empty_effect_case(self):
        cfg = static_cfg(model=ModelSpec(
            nuclei=(replace(ModelSpec.reference().nuclei[0], ax_mev=0,
                            ay_mev=0, az_mev=0),)),
            angle_grid=default_angle_grid(5))
        scan = threshold_scan("gamma_noise", [1e3, 1e4], cfg)
        assert all(r.contrast < 1e-6 for r in scan.rows)

    def test_invalid_axis_and_grid(self):
        cfg = static_cfg()
        with pytest.raises(ValueError, match="axis"):
            threshold_scan("temperature", [1.0], cfg)
        with pytest.raises(ValueError, match="grid"):
            threshold_scan("k", [], cfg)
        with pytest.raises(ValueError, match="grid"):
            threshold_scan("k", [-1.0], cfg)

    def test_k_axis_summary(self):
        cfg = static_cfg(rf_mode="perpendicular",
                         field_spec=FieldSpec(b_rf_tesla=150e-9),
                         angle_grid=default_angle_grid(5),
                         solver=SolverOptions(t_max=None, residual_eps=1e-5))
        scan = threshold_scan("k", [1e5, 1e6], cfg)
        assert "k_half_max_disruption" in scan.summary
        assert all(r.rf_disruption is not None for r in scan.rows)


class TestDephasedStart:
    def test_contrast_retained(self):
        singlet = static_sweep(ModelSpec.reference(), "s", angles=31)
        dephased = angular_sweep(static_cfg(initial_kind="dephased",
                                            angle_grid=default_angle_grid(31)))
        assert dephased.contrast > 0.5 * singlet.contrast


class TestNoiseSuppressesRfSensitivity:
    def test_disruption_non_increasing_in_noise(self):
        # at k = 1e5 the rf disruption shrinks as generic noise grows
        from rpcompass.experiments import rf_sweep_pair
        k = 1e5
        disruptions = []
        for frac in (0.01, 0.1, 1.0):
            model = ModelSpec.reference(k=k, gamma_noise=frac * k)
            pair = rf_sweep_pair(model, f"noise{frac:g}", angles=5,
                                 channels="generic-noise")
            disruptions.append(pair.rf_disruption)
        assert all(b <= a + 1e-9
                   for a, b in zip(disruptions, disruptions[1:]))


class TestPresets:
    def test_unknown_figure(self):
        with pytest.raises(ValueError, match="unknown figure"):
            preset_tables("fig9")

    def test_fig3_structure(self):
        tables = preset_tables("fig3", angles=9)
        assert len(tables) == 1
        stem, comments, columns, style = tables[0]
        assert stem == "fig3"
        assert "theta_rad" in columns
        series = [c for c in columns if c.startswith("phi_s_gamma")]
        assert len(series) == 5
        assert len(columns["theta_rad"]) == 9
