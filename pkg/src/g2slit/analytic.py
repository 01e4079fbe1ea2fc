"""Closed-form intensity-correlation surfaces for the double slit.

Thermal light: the correlated part of the second-order correlation depends on
the detector coordinates only through the difference D = x2 - x1,

    G2(x1, x2) ~ |F2(k * D / z)|^2,

where F2 is the transform of the squared transmission
(:func:`g2slit.geometry.aperture_spectrum`).  The measured correlation of
thermal light additionally carries a flat background of 1 (see
:mod:`g2slit.montecarlo`); the closed forms here are the correlated
(fluctuation) part only, stated as proportionalities, so surfaces default to
unit-peak normalization with the raw scale kept in metadata.

Entangled pairs: coincidence fringes depend only on the sum s = x1 + x2,

    G2(x1, x2) ~ cos^2(k * d * s / (2 z)),

with the single-slit envelope deliberately omitted (pass
``envelope=True`` to multiply it back in for realism).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ApertureSpec, OpticalConfig, aperture_spectrum, sinc

__all__ = [
    "SOURCE_KINDS",
    "NORMALIZATIONS",
    "PROVENANCES",
    "CorrelationSurface",
    "g2_thermal",
    "g2_entangled",
    "young_reference",
    "evaluate_surface",
    "save_surface",
    "load_surface",
    "surface_to_csv",
    "SurfaceMemoryError",
]

SOURCE_KINDS = ("thermal", "entangled", "coherent_reference")
NORMALIZATIONS = ("raw", "background_subtracted", "unit_peak")
PROVENANCES = ("analytic", "monte_carlo")

DEFAULT_MEMORY_BUDGET = 256 * 1024 * 1024  # bytes for the dense value grid


class SurfaceMemoryError(Exception):
    """Dense surface would exceed the configured memory budget."""


@dataclass
class CorrelationSurface:
    """Dense correlation values over (x1, x2) with axes and provenance tags."""

    values: np.ndarray
    axis_x1: np.ndarray
    axis_x2: np.ndarray
    normalization: str
    provenance: str
    source_kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.axis_x1 = np.asarray(self.axis_x1, dtype=float)
        self.axis_x2 = np.asarray(self.axis_x2, dtype=float)
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.source_kind!r}")
        if self.values.shape != (self.axis_x1.size, self.axis_x2.size):
            raise ValueError(
                f"value grid {self.values.shape} does not match axes "
                f"({self.axis_x1.size}, {self.axis_x2.size})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("surface contains non-finite values")
        if self.normalization in ("raw", "unit_peak") and np.any(self.values < 0):
            raise ValueError(f"{self.normalization} surface must be non-negative")
        if self.normalization == "unit_peak" and abs(self.values.max() - 1.0) > 1e-12:
            raise ValueError("unit_peak surface must have max value 1 (within 1e-12)")


def _thermal_point(config: OpticalConfig, aperture: ApertureSpec, delta):
    xi = (config.wavenumber / config.distance) * np.asarray(delta, dtype=float)
    spec = aperture_spectrum(aperture, xi)
    return (spec.real * spec.real + spec.imag * spec.imag)


def g2_thermal(config, aperture, x1, x2, unit_peak: bool = False):
    """Thermal fluctuation part |F2(k (x2-x1) / z)|^2; depends on x2 - x1 only."""
    value = _thermal_point(config, aperture, np.asarray(x2, float) - np.asarray(x1, float))
    if unit_peak:
        value = value / _thermal_point(config, aperture, 0.0)
    return value


def g2_entangled(config, aperture, x1, x2, envelope: bool = False):
    """Coincidence fringe cos^2(k d (x1+x2) / 2z); depends on x1 + x2 only.

    ``envelope=True`` multiplies in the single-slit sinc^2 factor (off by
    default: the canonical form ignores single-slit diffraction).
    """
    if aperture.kind != "double_slit":
        raise ValueError("entangled-pair fringes are defined for double_slit apertures")
    s = np.asarray(x1, float) + np.asarray(x2, float)
    arg = config.wavenumber * aperture.slit_separation_d * s / (2.0 * config.distance)
    value = np.cos(arg) ** 2
    if envelope:
        u = config.wavenumber * aperture.slit_width_a * s / (2.0 * config.distance)
        value = value * sinc(u) ** 2
    return value


def young_reference(config, aperture, x):
    """Coherent-illumination far-field intensity |F(k x / z)|^2.

    For the 0/1 double slit this equals :func:`g2_thermal` at D = x exactly
    (T^2 = T); adjacent fringe spacing is lambda*z/d.
    """
    if aperture.kind == "double_slit":
        return _thermal_point(config, aperture, x)
    xi = (config.wavenumber / config.distance) * np.asarray(x, dtype=float)
    xs = aperture.custom_x
    phase = np.exp(-1j * np.multiply.outer(xi, xs))
    spec = np.trapezoid(phase * aperture.custom_t, xs, axis=-1)
    return spec.real**2 + spec.imag**2


def evaluate_surface(
    config: OpticalConfig,
    aperture: ApertureSpec,
    source_kind: str,
    normalization: str = "unit_peak",
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> CorrelationSurface:
    """Dense evaluation over detector grid x detector grid.

    Thermal surfaces are built from the 2n-1 distinct diagonal offsets and
    entangled surfaces from the 2n-1 distinct anti-diagonal sums, so constancy
    along (anti-)diagonals holds exactly, not just to roundoff.
    """
    if source_kind not in SOURCE_KINDS:
        raise ValueError(f"unknown source kind {source_kind!r}")
    if normalization == "background_subtracted":
        raise ValueError("background_subtracted applies to monte_carlo surfaces only")

    axis = config.detector_grid.positions
    n = axis.size
    need = n * n * 8
    if need > memory_budget:
        raise SurfaceMemoryError(
            f"{n}x{n} surface needs {need} bytes, over the {memory_budget}-byte budget"
        )

    pitch = config.detector_grid.pixel_pitch
    offsets = np.arange(-(n - 1), n) * pitch
    i = np.arange(n)
    if source_kind == "thermal":
        line = _thermal_point(config, aperture, offsets)
        values = line[(i[None, :] - i[:, None]) + (n - 1)]
    elif source_kind == "entangled":
        half = n // 2
        sums = (np.arange(2 * n - 1) - 2 * half) * pitch
        line = g2_entangled(config, aperture, sums, 0.0)
        values = line[i[:, None] + i[None, :]]
    else:
        intensity = young_reference(config, aperture, axis)
        values = np.multiply.outer(intensity, intensity)

    meta = {"raw_peak": float(values.max())}
    if normalization == "unit_peak":
        values = values / values.max()
    return CorrelationSurface(values, axis, axis.copy(), normalization, "analytic", source_kind, meta)


# ---------------------------------------------------------------------------
# plain-text matrix format and CSV export
# ---------------------------------------------------------------------------

def save_surface(surface: CorrelationSurface, path) -> None:
    """Write the matrix text format: axis/source/normalization headers, then rows.

    Row i holds values for axis_x1[i]; columns follow axis_x2.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for name, axis in (("axis_x1", surface.axis_x1), ("axis_x2", surface.axis_x2)):
            fh.write(f"# {name} {axis[0]:.17g} {axis[-1]:.17g} {axis.size}\n")
        fh.write(f"# source {surface.source_kind}\n")
        fh.write(f"# normalization {surface.normalization}\n")
        fh.write(f"# provenance {surface.provenance}\n")
        np.savetxt(fh, surface.values, fmt="%.17g")


def load_surface(path) -> CorrelationSurface:
    header: dict[str, list[str]] = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts:
                    header[parts[0]] = parts[1:]
                continue
            rows.append(np.array(line.split(), dtype=float))
    if "axis_x1" not in header or "axis_x2" not in header:
        raise ValueError(f"{path}: missing axis headers")

    def axis_from(parts):
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(lo, hi, num)

    return CorrelationSurface(
        values=np.vstack(rows),
        axis_x1=axis_from(header["axis_x1"]),
        axis_x2=axis_from(header["axis_x2"]),
        normalization=header.get("normalization", ["raw"])[0],
        provenance=header.get("provenance", ["analytic"])[0],
        source_kind=header.get("source", ["thermal"])[0],
    )


def surface_to_csv(surface: CorrelationSurface, path, max_points: int = 1 << 20) -> None:
    """(x1, x2, value) triplets for small grids."""
    n = surface.values.size
    if n > max_points:
        raise SurfaceMemoryError(f"CSV export capped at {max_points} points, surface has {n}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x1,x2,value\n")
        for i, x1 in enumerate(surface.axis_x1):
            for j, x2 in enumerate(surface.axis_x2):
                fh.write(f"{x1:.17g},{x2:.17g},{surface.values[i, j]:.17g}\n")
