"""Detector scan trajectories over the correlation surface.

Two point detectors moving together trace the affine line x2 = alpha*x1 + beta
through the (x1, x2) plane.  The fringe spacing of the resulting cross-section
follows from which combination the source correlates:

* thermal sources correlate the difference x2 - x1, so a line sees the period
  lambda*z/d stretched by 1/|alpha - 1|; alpha = 1 rides a diagonal of
  constant difference and the section is flat.
* entangled pairs correlate the sum x1 + x2, giving 1/|alpha + 1| and a flat
  section at alpha = -1.

The classical Young spacing lambda*z/d is the baseline; sections narrower than
it are the sub-wavelength regimes, wider ones the stretched regimes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .analytic import CorrelationSurface
from .geometry import ApertureSpec, OpticalConfig

__all__ = [
    "FLAT",
    "Flat",
    "ScanLine",
    "CrossSection",
    "preset_line",
    "PRESET_ALPHAS",
    "extract_cross_section",
    "predict_fringe_spacing",
    "resolution_factor",
    "classical_baseline",
]


class Flat:
    """Sentinel for scan lines whose cross-section carries no fringes."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "FLAT"


FLAT = Flat()

# Named presets (a)-(d), per source kind.  Line (a) fixes the second detector
# at x2 = 0 while the first scans; the rest move both detectors.
PRESET_ALPHAS = {
    "thermal": {"a": 0.0, "b": -1.0, "c": -2.0, "d": 0.5},
    "entangled": {"a": 0.0, "b": 1.0, "c": 2.0, "d": -0.5},
}


@dataclass(frozen=True)
class ScanLine:
    """x2 = alpha*x1 + beta sampled at n_points over [x_min, x_max].

    ``vertical=True`` is the one affine case the slope form cannot express:
    x1 fixed at beta while x2 scans the parameter range.
    """

    alpha: float
    beta: float = 0.0
    x_min: float = -2.2e-3
    x_max: float = 2.2e-3
    n_points: int = 2001
    label: str | None = None
    vertical: bool = False

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("scan range must satisfy x_min < x_max")
        if self.n_points < 2:
            raise ValueError("scan line needs at least 2 points")

    @property
    def step(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(parameter, x1, x2) triplets along the line."""
        x = np.linspace(self.x_min, self.x_max, self.n_points)
        if self.vertical:
            return x, np.full_like(x, self.beta), x
        return x, x, self.alpha * x + self.beta


def preset_line(name: str, source_kind: str, **overrides) -> ScanLine:
    """Named scan line (a)-(d) for a thermal or entangled source."""
    try:
        alpha = PRESET_ALPHAS[source_kind][name]
    except KeyError:
        raise ValueError(
            f"no preset {name!r} for source {source_kind!r}; "
            f"presets are a-d for thermal/entangled"
        ) from None
    line = ScanLine(alpha=alpha, beta=0.0, label=name)
    return replace(line, **overrides) if overrides else line


@dataclass
class CrossSection:
    """Surface values interpolated along a scan line."""

    parameter: np.ndarray
    values: np.ndarray
    source_kind: str
    scanline: ScanLine
    provenance: str
    n_excluded: int = 0

    def __post_init__(self):
        self.parameter = np.asarray(self.parameter, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.parameter.shape != self.values.shape:
            raise ValueError("parameter and value arrays must have equal length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("cross-section contains non-finite values")


def extract_cross_section(surface: CorrelationSurface, line: ScanLine) -> CrossSection:
    """Bilinear interpolation of the surface at (x1, x2) pairs along the line.

    Points falling outside the surface axes are excluded and counted; a line
    entirely outside raises.
    """
    param, x1, x2 = line.points()
    interp = RegularGridInterpolator(
        (surface.axis_x1, surface.axis_x2),
        surface.values,
        method="linear",
        bounds_error=False,
        fill_value=np.nan,
    )
    sampled = interp(np.column_stack([x1, x2]))
    keep = np.isfinite(sampled)
    n_excluded = int(np.count_nonzero(~keep))
    if not np.any(keep):
        raise ValueError("scan line lies entirely outside the surface")
    return CrossSection(
        parameter=param[keep],
        values=sampled[keep],
        source_kind=surface.source_kind,
        scanline=line,
        provenance=surface.provenance,
        n_excluded=n_excluded,
    )


def classical_baseline(config: OpticalConfig, aperture: ApertureSpec) -> float:
    """Young fringe spacing lambda*z/d of the double slit."""
    if aperture.kind != "double_slit":
        raise ValueError("classical baseline requires a double_slit aperture")
    return config.wavelength * config.distance / aperture.slit_separation_d


def predict_fringe_spacing(
    line: ScanLine,
    config: OpticalConfig,
    aperture: ApertureSpec,
    source_kind: str,
):
    """Fringe spacing of the section in the scan parameter, or FLAT.

    thermal:   lambda*z / (d * |alpha - 1|), FLAT at alpha = 1
    entangled: lambda*z / (d * |alpha + 1|), FLAT at alpha = -1
    Vertical lines (x1 fixed) reduce to the classical spacing for both.
    """
    if source_kind not in ("thermal", "entangled"):
        raise ValueError(f"fringe spacing is defined for thermal/entangled, not {source_kind!r}")
    base = classical_baseline(config, aperture)
    if line.vertical:
        return base
    stretch = line.alpha - 1.0 if source_kind == "thermal" else line.alpha + 1.0
    if stretch == 0.0:
        return FLAT
    return base / abs(stretch)


def resolution_factor(line, config, aperture, source_kind):
    """Section spacing over the classical baseline: 1/|alpha -+ 1|, or FLAT."""
    spacing = predict_fringe_spacing(line, config, aperture, source_kind)
    if spacing is FLAT:
        return FLAT
    return spacing / classical_baseline(config, aperture)
