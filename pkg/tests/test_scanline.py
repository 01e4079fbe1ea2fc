import numpy as np
import pytest

from g2slit import analysis, analytic, scanline
from g2slit.geometry import double_slit, paper_preset
from g2slit.scanline import (
    FLAT,
    ScanLine,
    classical_baseline,
    extract_cross_section,
    predict_fringe_spacing,
    preset_line,
    resolution_factor,
)

BASELINE = 457e-9 * 0.23 / 0.12e-3


class TestPresets:
    @pytest.mark.parametrize(
        "name,alpha", [("a", 0.0), ("b", -1.0), ("c", -2.0), ("d", 0.5)]
    )
    def test_thermal_table(self, name, alpha):
        assert preset_line(name, "thermal").alpha == alpha

    @pytest.mark.parametrize(
        "name,alpha", [("a", 0.0), ("b", 1.0), ("c", 2.0), ("d", -0.5)]
    )
    def test_entangled_table(self, name, alpha):
        assert preset_line(name, "entangled").alpha == alpha

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            preset_line("e", "thermal")
        with pytest.raises(ValueError):
            preset_line("a", "coherent_reference")

    def test_line_validation(self):
        with pytest.raises(ValueError):
            ScanLine(alpha=0.0, x_min=1.0, x_max=0.0)
        with pytest.raises(ValueError):
            ScanLine(alpha=0.0, n_points=1)


class TestPrediction:
    def test_classical_baseline(self, preset):
        config, aperture = preset
        assert classical_baseline(config, aperture) == pytest.approx(0.87592e-3, rel=1e-4)

    def test_baseline_linear_in_wavelength(self, preset):
        config, aperture = preset
        config2, _ = paper_preset()
        doubled = type(config)(
            wavelength=2 * config.wavelength,
            distance=config.distance,
            source_grid=config.source_grid,
            detector_grid=config.detector_grid,
        )
        assert classical_baseline(doubled, aperture) == pytest.approx(
            2 * classical_baseline(config, aperture)
        )

    def test_baseline_inverse_in_separation(self, preset):
        config, _ = preset
        aperture2 = double_slit(0.038e-3, 2 * 0.12e-3)
        assert classical_baseline(config, aperture2) == pytest.approx(BASELINE / 2)

    @pytest.mark.parametrize(
        "alpha,expected",
        [
            (-1.0, BASELINE / 2),
            (0.0, BASELINE),
            (-2.0, BASELINE / 3),
            (0.5, 2 * BASELINE),
            (4 / 5, 5 * BASELINE),  # x2 = (N-1)x/N with N = 5
        ],
    )
    def test_thermal_spacing(self, preset, alpha, expected):
        config, aperture = preset
        line = ScanLine(alpha=alpha)
        assert predict_fringe_spacing(line, config, aperture, "thermal") == pytest.approx(
            expected, rel=1e-12
        )

    def test_thermal_flat_at_common_motion(self, preset):
        config, aperture = preset
        assert predict_fringe_spacing(ScanLine(alpha=1.0), config, aperture, "thermal") is FLAT

    @pytest.mark.parametrize(
        "alpha,expected",
        [(1.0, BASELINE / 2), (2.0, BASELINE / 3), (-0.5, 2 * BASELINE), (0.0, BASELINE)],
    )
    def test_entangled_spacing(self, preset, alpha, expected):
        config, aperture = preset
        line = ScanLine(alpha=alpha)
        assert predict_fringe_spacing(line, config, aperture, "entangled") == pytest.approx(
            expected, rel=1e-12
        )

    def test_entangled_flat_at_opposite_motion(self, preset):
        config, aperture = preset
        assert (
            predict_fringe_spacing(ScanLine(alpha=-1.0), config, aperture, "entangled") is FLAT
        )

    def test_coherent_reference_unsupported(self, preset):
        config, aperture = preset
        with pytest.raises(ValueError):
            predict_fringe_spacing(ScanLine(alpha=0.0), config, aperture, "coherent_reference")

    def test_vertical_line_gives_baseline(self, preset):
        config, aperture = preset
        line = ScanLine(alpha=0.0, beta=0.5e-3, vertical=True)
        assert predict_fringe_spacing(line, config, aperture, "thermal") == pytest.approx(BASELINE)
        assert predict_fringe_spacing(line, config, aperture, "entangled") == pytest.approx(
            BASELINE
        )

    def test_resolution_factor(self, preset):
        config, aperture = preset
        assert resolution_factor(
            ScanLine(alpha=-2.0), config, aperture, "thermal"
        ) == pytest.approx(1 / 3)
        assert resolution_factor(ScanLine(alpha=1.0), config, aperture, "thermal") is FLAT


@pytest.fixture(scope="module")
def thermal_surface(preset):
    config, aperture = preset
    return analytic.evaluate_surface(config, aperture, "thermal")


class TestExtraction:
    def test_opposite_scan_matches_difference_curve(self, preset, thermal_surface):
        # line (b): section equals the closed form at Delta = -2x
        config, aperture = preset
        line = preset_line("b", "thermal", x_min=-1.5e-3, x_max=1.5e-3, n_points=1001)
        section = extract_cross_section(thermal_surface, line)
        expected = analytic.g2_thermal(
            config, aperture, section.parameter, -section.parameter, unit_peak=True
        )
        assert section.n_excluded == 0
        assert np.max(np.abs(section.values - expected)) < 1e-3  # bilinear interpolation

    def test_two_point_line(self, thermal_surface):
        line = ScanLine(alpha=0.0, x_min=-1e-3, x_max=1e-3, n_points=2)
        section = extract_cross_section(thermal_surface, line)
        assert section.parameter.size == 2

    def test_out_of_range_points_excluded(self, thermal_surface):
        line = ScanLine(alpha=-2.0, x_min=-3.2e-3, x_max=3.2e-3, n_points=1001)
        section = extract_cross_section(thermal_surface, line)
        assert section.n_excluded > 0
        assert section.parameter.size + section.n_excluded == 1001

    def test_fully_outside_raises(self, thermal_surface):
        line = ScanLine(alpha=0.0, beta=99e-3, x_min=20e-3, x_max=30e-3, n_points=64)
        with pytest.raises(ValueError, match="outside"):
            extract_cross_section(thermal_surface, line)


class TestSpacingAgainstPrediction:
    @pytest.mark.parametrize("alpha", [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 2 / 3, 2.0, 3.0])
    def test_thermal_lines(self, wide_thermal_surface, alpha):
        surface, config, aperture = wide_thermal_surface
        line = ScanLine(alpha=alpha, x_min=-12.5e-3, x_max=12.5e-3, n_points=2001)
        predicted = predict_fringe_spacing(line, config, aperture, "thermal")
        section = extract_cross_section(surface, line)
        report = analysis.detect_peaks(section, central_window=5 * predicted)
        assert abs(report.mean_spacing - predicted) <= line.step

    @pytest.mark.parametrize("beta", [0.0, 0.2e-3, -0.2e-3])
    def test_spacing_invariant_under_offset(self, preset, thermal_surface, beta):
        config, aperture = preset
        line = preset_line("b", "thermal", beta=beta, x_min=-1.5e-3, x_max=1.5e-3)
        predicted = predict_fringe_spacing(line, config, aperture, "thermal")
        section = extract_cross_section(thermal_surface, line)
        report = analysis.detect_peaks(section, central_window=5 * predicted)
        assert report.mean_spacing == pytest.approx(BASELINE / 2, rel=2e-3)
