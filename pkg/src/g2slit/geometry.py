"""Apertures, optical layout, and sampling grids shared by every pipeline.

All lengths are SI meters internally; unit suffixes (nm/um/mm/m) exist only
at the config-file and report boundaries.

sinc convention: this package uses the *unnormalized* sinc(u) = sin(u)/u
(``sinc(0) = 1``).  numpy's ``np.sinc`` is pi-normalized, a classic source of
silent factor-of-pi bugs, so every module goes through :func:`sinc` below.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "sinc",
    "parse_length",
    "centered_positions",
    "ApertureSpec",
    "double_slit",
    "custom_aperture",
    "SourceGrid",
    "DetectorGrid",
    "OpticalConfig",
    "transmission",
    "mean_transmission",
    "aperture_spectrum",
    "paper_preset",
    "load_config",
    "PAPER_WAVELENGTH",
    "PAPER_SLIT_WIDTH",
    "PAPER_SLIT_SEPARATION",
    "PAPER_DISTANCE",
    "PAPER_PIXEL_PITCH",
]

# Reference experimental parameters (the preset exposed as config name "paper").
PAPER_WAVELENGTH = 457e-9
PAPER_SLIT_WIDTH = 0.038e-3
PAPER_SLIT_SEPARATION = 0.12e-3
PAPER_DISTANCE = 0.23
PAPER_PIXEL_PITCH = 4.65e-6

_LENGTH_UNITS = {"nm": 1e-9, "um": 1e-6, "mm": 1e-3, "m": 1.0}

_LENGTH_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(nm|um|mm|m)?\s*$")


def sinc(u):
    """Unnormalized sinc: sin(u)/u with sinc(0) = 1."""
    return np.sinc(np.asarray(u) / np.pi)


def parse_length(text: str | float) -> float:
    """Parse a length with an optional nm/um/mm/m suffix into meters."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _LENGTH_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse length {text!r} (expected e.g. '0.12 mm')")
    value = float(m.group(1))
    unit = m.group(2) or "m"
    return value * _LENGTH_UNITS[unit]


def centered_positions(n: int, step: float) -> np.ndarray:
    """Uniform coordinates (i - n//2) * step; index n//2 sits at x = 0."""
    return (np.arange(n) - n // 2) * step


@dataclass(frozen=True)
class ApertureSpec:
    """1-D transmission function: a double slit or a sampled custom profile.

    For ``kind="double_slit"``: ``slit_width_a`` is the width of each slit and
    ``slit_separation_d`` the center-to-center distance.  For ``kind="custom"``
    the profile is a uniformly sampled transmission in [0, 1].
    """

    kind: str
    slit_width_a: float = 0.0
    slit_separation_d: float = 0.0
    custom_x: np.ndarray | None = None
    custom_t: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "double_slit":
            if self.slit_width_a <= 0:
                raise ValueError("slit width must be > 0")
            if self.slit_separation_d <= self.slit_width_a:
                raise ValueError("slit separation must exceed slit width (slits must not overlap)")
        elif self.kind == "custom":
            if self.custom_x is None or self.custom_t is None:
                raise ValueError("custom aperture requires sampled x and transmission arrays")
            x = np.asarray(self.custom_x, dtype=float)
            t = np.asarray(self.custom_t, dtype=float)
            if x.ndim != 1 or x.shape != t.shape or x.size < 2:
                raise ValueError("custom profile needs matching 1-D arrays with >= 2 samples")
            steps = np.diff(x)
            if steps[0] <= 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                raise ValueError("custom profile must be on a uniform, increasing grid")
            if np.any(t < 0.0) or np.any(t > 1.0):
                raise ValueError("transmission samples must lie in [0, 1]")
            object.__setattr__(self, "custom_x", x)
            object.__setattr__(self, "custom_t", t)
        else:
            raise ValueError(f"unknown aperture kind {self.kind!r}")


def double_slit(width: float, separation: float) -> ApertureSpec:
    return ApertureSpec(kind="double_slit", slit_width_a=width, slit_separation_d=separation)


def custom_aperture(x: np.ndarray, t: np.ndarray) -> ApertureSpec:
    return ApertureSpec(kind="custom", custom_x=np.asarray(x, float), custom_t=np.asarray(t, float))


@dataclass(frozen=True)
class SourceGrid:
    half_extent: float
    n_samples: int

    def __post_init__(self):
        if self.half_extent <= 0:
            raise ValueError("source half extent must be > 0")
        if self.n_samples < 2:
            raise ValueError("source grid needs >= 2 samples")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.n_samples

    @property
    def positions(self) -> np.ndarray:
        return centered_positions(self.n_samples, self.spacing)


@dataclass(frozen=True)
class DetectorGrid:
    pixel_pitch: float
    n_pixels: int

    def __post_init__(self):
        if self.pixel_pitch <= 0:
            raise ValueError("pixel pitch must be > 0")
        if self.n_pixels < 2:
            raise ValueError("detector grid needs >= 2 pixels")

    @property
    def half_extent(self) -> float:
        return 0.5 * self.pixel_pitch * self.n_pixels

    @property
    def positions(self) -> np.ndarray:
        return centered_positions(self.n_pixels, self.pixel_pitch)


@dataclass(frozen=True)
class OpticalConfig:
    """Wavelength, far-field distance, and the two sampling grids.

    Construction enforces the far-field sampling criterion
    ``source spacing <= lambda * z / (2 * detector half extent)``
    so the discretized propagation kernel cannot alias.
    """

    wavelength: float
    distance: float
    source_grid: SourceGrid
    detector_grid: DetectorGrid

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be > 0")
        if self.distance <= 0:
            raise ValueError("propagation distance must be > 0")
        limit = self.wavelength * self.distance / (2.0 * self.detector_grid.half_extent)
        if self.source_grid.spacing > limit * (1.0 + 1e-12):
            raise ValueError(
                "source sample spacing {:.4g} m violates the sampling criterion "
                "(must be <= lambda*z / (2*detector half extent) = {:.4g} m); "
                "increase source samples or shrink the detector extent".format(
                    self.source_grid.spacing, limit
                )
            )

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength


def transmission(aperture: ApertureSpec, x_prime):
    """Pointwise transmission amplitude T(x') in [0, 1].

    Double slit: 1 inside either slit (edges inclusive), 0 elsewhere.
    Custom: linear interpolation of the samples, clamped to [0, 1] and to 0
    outside the sampled support.
    """
    x = np.asarray(x_prime, dtype=float)
    if aperture.kind == "double_slit":
        a = aperture.slit_width_a
        d = aperture.slit_separation_d
        inside = (np.abs(x - d / 2) <= a / 2) | (np.abs(x + d / 2) <= a / 2)
        out = inside.astype(float)
    else:
        out = np.interp(x, aperture.custom_x, aperture.custom_t, left=0.0, right=0.0)
        out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def mean_transmission(aperture: ApertureSpec, x_prime, cell: float):
    """Cell-averaged transmission over [x - cell/2, x + cell/2].

    Band-limits a sampled aperture: partial slit coverage of edge cells shows
    up as fractional amplitude, which keeps discretized transforms faithful to
    the continuous profile regardless of grid alignment.
    """
    x = np.asarray(x_prime, dtype=float)
    lo = x - cell / 2
    hi = x + cell / 2
    if aperture.kind == "double_slit":
        a = aperture.slit_width_a
        d = aperture.slit_separation_d
        out = np.zeros_like(x)
        for center in (d / 2, -d / 2):
            overlap = np.minimum(hi, center + a / 2) - np.maximum(lo, center - a / 2)
            out += np.clip(overlap, 0.0, None) / cell
        out = np.clip(out, 0.0, 1.0)
    else:
        # Fine sub-sampling of the interpolated profile; adequate for smooth
        # custom profiles, exact in the limit of small cells.
        offs = (np.arange(8) + 0.5) / 8.0 - 0.5
        out = np.mean(
            [transmission(aperture, x + o * cell) for o in offs], axis=0
        )
    return out if out.ndim else float(out)


def aperture_spectrum(aperture: ApertureSpec, xi):
    """Fourier transform of T^2 at spatial frequency xi (rad/m).

    For the 0/1 double slit T^2 = T and the closed form is
    ``2a * sinc(a*xi/2) * cos(d*xi/2)`` (unnormalized sinc).  Custom profiles
    are integrated with the trapezoid rule over the stored samples.
    """
    xi_arr = np.asarray(xi, dtype=float)
    if aperture.kind == "double_slit":
        a = aperture.slit_width_a
        d = aperture.slit_separation_d
        out = 2.0 * a * sinc(a * xi_arr / 2.0) * np.cos(d * xi_arr / 2.0)
        out = out.astype(complex)
    else:
        x = aperture.custom_x
        t2 = aperture.custom_t**2
        phase = np.exp(-1j * np.multiply.outer(xi_arr, x))
        out = np.trapezoid(phase * t2, x, axis=-1)
    return out if out.ndim else complex(out)


def paper_preset(
    source_half_extent: float = 0.128e-3,
    source_samples: int = 128,
    detector_pitch: float = PAPER_PIXEL_PITCH,
    detector_pixels: int = 1392,
) -> tuple[OpticalConfig, ApertureSpec]:
    """Reference experimental layout: 457 nm, a = 0.038 mm, d = 0.12 mm, z = 0.23 m.

    Grid sizes are simulation choices, not measured constants; the defaults
    give a 2 um source step (slit edges land on cell boundaries, so the
    sampled aperture carries the exact slit width and separation) and a full
    4.65-um-pitch detector row.
    """
    aperture = double_slit(PAPER_SLIT_WIDTH, PAPER_SLIT_SEPARATION)
    config = OpticalConfig(
        wavelength=PAPER_WAVELENGTH,
        distance=PAPER_DISTANCE,
        source_grid=SourceGrid(source_half_extent, source_samples),
        detector_grid=DetectorGrid(detector_pitch, detector_pixels),
    )
    return config, aperture


_GRID_DEFAULTS = {
    "source_half_extent": 0.128e-3,
    "source_samples": 128,
    "detector_pitch": PAPER_PIXEL_PITCH,
    "detector_pixels": 1392,
}


def load_config(path: str) -> tuple[OpticalConfig, ApertureSpec]:
    """Read an optical layout from an INI-style file.

    Sections: [aperture] (kind, slit_width, slit_separation), [optics]
    (wavelength, distance), [grids] (source_half_extent, source_samples,
    detector_pitch, detector_pixels).  Lengths accept nm/um/mm/m suffixes.
    The name ``paper`` is reserved for the built-in reference preset.
    """
    if path == "paper":
        return paper_preset()

    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    ap = parser["aperture"] if parser.has_section("aperture") else {}
    kind = ap.get("kind", "double_slit")
    if kind != "double_slit":
        raise ValueError("config files currently describe double_slit apertures only")
    aperture = double_slit(
        parse_length(ap.get("slit_width", "0.038 mm")),
        parse_length(ap.get("slit_separation", "0.12 mm")),
    )

    op = parser["optics"] if parser.has_section("optics") else {}
    wavelength = parse_length(op.get("wavelength", "457 nm"))
    distance = parse_length(op.get("distance", "0.23 m"))

    gr = parser["grids"] if parser.has_section("grids") else {}
    config = OpticalConfig(
        wavelength=wavelength,
        distance=distance,
        source_grid=SourceGrid(
            parse_length(gr.get("source_half_extent", _GRID_DEFAULTS["source_half_extent"])),
            int(gr.get("source_samples", _GRID_DEFAULTS["source_samples"])),
        ),
        detector_grid=DetectorGrid(
            parse_length(gr.get("detector_pitch", _GRID_DEFAULTS["detector_pitch"])),
            int(gr.get("detector_pixels", _GRID_DEFAULTS["detector_pixels"])),
        ),
    )
    return config, aperture
