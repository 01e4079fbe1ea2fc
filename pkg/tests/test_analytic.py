import numpy as np
import pytest

from g2slit import analytic
from g2slit.analytic import (
    CorrelationSurface,
    SurfaceMemoryError,
    evaluate_surface,
    g2_entangled,
    g2_thermal,
    load_surface,
    save_surface,
    surface_to_csv,
    young_reference,
)
from g2slit.geometry import paper_preset

BASELINE = 457e-9 * 0.23 / 0.12e-3  # lambda*z/d = 0.87592 mm


class TestThermal:
    def test_global_maximum_on_diagonal(self, preset):
        config, aperture = preset
        peak = g2_thermal(config, aperture, 1e-4, 1e-4)
        off = g2_thermal(config, aperture, 0.0, np.linspace(1e-5, 3e-3, 500))
        assert np.all(off <= peak)

    def test_depends_only_on_difference(self, preset):
        config, aperture = preset
        x = np.linspace(-1e-3, 1e-3, 101)
        assert np.allclose(
            g2_thermal(config, aperture, x, x + 0.4e-3),
            g2_thermal(config, aperture, 0.0, 0.4e-3),
            rtol=1e-9,
        )

    def test_cosine_zero_at_half_classical_spacing(self, preset):
        # root of the closed form at Delta = lambda*z/(2d); quadrature oracle agrees
        config, aperture = preset
        delta = BASELINE / 2
        value = g2_thermal(config, aperture, 0.0, delta, unit_peak=True)
        assert value < 1e-12

        xi = config.wavenumber / config.distance * delta
        a, d = aperture.slit_width_a, aperture.slit_separation_d
        oracle = 0.0 + 0.0j
        for center in (d / 2, -d / 2):
            xs = np.linspace(center - a / 2, center + a / 2, 20001)
            oracle += np.trapezoid(np.exp(-1j * xi * xs), xs)
        assert abs(oracle) ** 2 / (2 * a) ** 2 < 1e-10

    def test_unit_peak_range(self, preset):
        config, aperture = preset
        x = np.linspace(-3e-3, 3e-3, 1001)
        vals = g2_thermal(config, aperture, 0.0, x, unit_peak=True)
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)

    def test_translation_invariance(self, preset):
        config, aperture = preset
        x1 = np.linspace(-1e-3, 1e-3, 57)
        x2 = 0.3e-3 - 0.5 * x1
        for shift in (-0.2e-3, 0.1e-3, 0.5e-3):
            assert np.allclose(
                g2_thermal(config, aperture, x1 + shift, x2 + shift),
                g2_thermal(config, aperture, x1, x2),
                rtol=1e-9,
            )


class TestEntangled:
    def test_unity_at_zero_sum(self, preset):
        config, aperture = preset
        assert g2_entangled(config, aperture, 0.7e-3, -0.7e-3) == 1.0

    def test_zero_at_half_spacing_sum(self, preset):
        # argument reaches pi/2 when x1 + x2 = lambda*z/(2d)
        config, aperture = preset
        s = BASELINE / 2
        assert g2_entangled(config, aperture, s / 2, s / 2) < 1e-12

    def test_values_in_unit_interval(self, preset):
        config, aperture = preset
        rng = np.random.default_rng(0)
        x1 = rng.uniform(-3e-3, 3e-3, 500)
        x2 = rng.uniform(-3e-3, 3e-3, 500)
        vals = g2_entangled(config, aperture, x1, x2)
        assert np.all((0.0 <= vals) & (vals <= 1.0))

    def test_diagonal_scan_period_is_half_classical(self, preset):
        # scanning x1 = x2 = x: fringe period lambda*z/(2d), twice as narrow
        config, aperture = preset
        x = np.linspace(-2e-3, 2e-3, 801)
        period = BASELINE / 2
        assert np.allclose(
            g2_entangled(config, aperture, x, x),
            g2_entangled(config, aperture, x + period, x + period),
            atol=1e-9,
        )

    def test_anti_translation_invariance(self, preset):
        config, aperture = preset
        x1 = np.linspace(-1e-3, 1e-3, 57)
        x2 = 0.25 * x1 + 0.1e-3
        for shift in (-0.2e-3, 0.1e-3, 0.5e-3):
            assert np.allclose(
                g2_entangled(config, aperture, x1 + shift, x2 - shift),
                g2_entangled(config, aperture, x1, x2),
                rtol=0,
                atol=1e-9,
            )

    def test_envelope_flag(self, preset):
        config, aperture = preset
        bare = g2_entangled(config, aperture, 1e-3, 1e-3)
        with_env = g2_entangled(config, aperture, 1e-3, 1e-3, envelope=True)
        assert with_env < bare

    def test_custom_aperture_rejected(self, preset):
        from g2slit.geometry import custom_aperture

        config, _ = preset
        ap = custom_aperture(np.linspace(-1e-4, 1e-4, 11), np.ones(11))
        with pytest.raises(ValueError):
            g2_entangled(config, ap, 0.0, 0.0)


class TestYoungReference:
    def test_maximum_at_center(self, preset):
        config, aperture = preset
        x = np.linspace(-3e-3, 3e-3, 1201)
        vals = young_reference(config, aperture, x)
        assert vals.max() == young_reference(config, aperture, 0.0)

    def test_sinc_envelope_null(self, preset):
        # first zero of the single-slit factor at x = lambda*z/a = 2.766 mm
        config, aperture = preset
        null = config.wavelength * config.distance / aperture.slit_width_a
        peak = young_reference(config, aperture, 0.0)
        assert young_reference(config, aperture, null) < 1e-12 * peak

    def test_equals_thermal_fluctuation_pointwise(self, preset):
        config, aperture = preset
        x = np.linspace(-3e-3, 3e-3, 1001)
        assert np.array_equal(
            young_reference(config, aperture, x),
            g2_thermal(config, aperture, 0.0, x),
        )


class TestSurface:
    def test_thermal_symmetric_and_diagonal_constant(self, preset):
        config, aperture = preset
        surface = evaluate_surface(config, aperture, "thermal")
        v = surface.values
        assert np.array_equal(v, v.T)
        n = v.shape[0]
        idx = np.arange(n - 1)
        # every diagonal x2 - x1 = const is exactly constant
        assert np.array_equal(v[idx, idx], np.full(n - 1, v[0, 0]))
        assert np.array_equal(v[idx, idx + 1], np.full(n - 1, v[0, 1]))

    def test_entangled_antidiagonal_constant(self, preset):
        config, aperture = preset
        surface = evaluate_surface(config, aperture, "entangled")
        v = surface.values
        n = v.shape[0]
        idx = np.arange(n)
        anti = v[idx, idx[::-1]]
        assert np.array_equal(anti, np.full(n, anti[0]))

    def test_unit_peak_on_main_diagonal(self, preset):
        config, aperture = preset
        surface = evaluate_surface(config, aperture, "thermal", "unit_peak")
        assert surface.values.max() == 1.0
        n = surface.values.shape[0]
        assert surface.values[n // 2, n // 2] == 1.0

    def test_raw_keeps_scale_in_meta(self, preset):
        config, aperture = preset
        surface = evaluate_surface(config, aperture, "thermal", "raw")
        a = aperture.slit_width_a
        assert surface.meta["raw_peak"] == pytest.approx((2 * a) ** 2, rel=1e-12)

    def test_coherent_reference_is_intensity_product(self, preset):
        config, aperture = preset
        surface = evaluate_surface(config, aperture, "coherent_reference", "raw")
        x = surface.axis_x1
        intensity = young_reference(config, aperture, x)
        assert np.allclose(surface.values, np.outer(intensity, intensity), rtol=1e-12)

    def test_memory_guard(self, preset):
        config, aperture = preset
        with pytest.raises(SurfaceMemoryError):
            evaluate_surface(config, aperture, "thermal", memory_budget=1024)

    def test_background_subtracted_rejected_for_analytic(self, preset):
        config, aperture = preset
        with pytest.raises(ValueError):
            evaluate_surface(config, aperture, "thermal", "background_subtracted")

    def test_invariant_validation(self):
        with pytest.raises(ValueError):
            CorrelationSurface(
                values=np.ones((3, 2)),
                axis_x1=np.arange(3.0),
                axis_x2=np.arange(3.0),
                normalization="raw",
                provenance="analytic",
                source_kind="thermal",
            )
        with pytest.raises(ValueError):
            CorrelationSurface(
                values=np.full((2, 2), 0.5),
                axis_x1=np.arange(2.0),
                axis_x2=np.arange(2.0),
                normalization="unit_peak",
                provenance="analytic",
                source_kind="thermal",
            )


class TestSurfaceIO:
    def test_matrix_round_trip(self, tmp_path, desk_config):
        config, aperture = desk_config
        surface = evaluate_surface(config, aperture, "thermal")
        path = tmp_path / "surface.txt"
        save_surface(surface, path)
        loaded = load_surface(path)
        assert np.array_equal(loaded.values, surface.values)
        assert np.allclose(loaded.axis_x1, surface.axis_x1, rtol=0, atol=1e-18)
        assert loaded.source_kind == "thermal"
        assert loaded.normalization == "unit_peak"
        assert loaded.provenance == "analytic"

    def test_csv_export(self, tmp_path, desk_config):
        config, aperture = desk_config
        small, aperture = paper_preset(detector_pitch=0.1e-3, detector_pixels=16)
        surface = evaluate_surface(small, aperture, "entangled")
        path = tmp_path / "surface.csv"
        surface_to_csv(surface, path)
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        assert rows.shape == (256, 3)
        assert rows[:, 2].max() == pytest.approx(1.0)
