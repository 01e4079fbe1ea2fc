"""Peak detection, fringe-spacing estimation, and visibility measurement.

Fringe maxima of an envelope-modulated pattern are pulled toward the envelope
center (for the double-slit product shape the pull reaches several percent of
the period), so refining maxima directly would bias the spacing.  The fringe
*minima* sit at the zeros of the oscillation and do not move under any smooth
positive envelope; each reported peak position is therefore the midpoint of
its two flanking minima, each minimum refined by 3-point parabolic
interpolation.  Peaks lacking a resolved minimum on either side (pattern runs
off the section) are dropped from the spacing statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .scanline import CrossSection

__all__ = ["FringeReport", "TooFewPeaksError", "detect_peaks", "measure_visibility"]


class TooFewPeaksError(Exception):
    """Fewer than two usable peaks; carries whatever was found."""

    def __init__(self, message, peak_positions):
        super().__init__(message)
        self.peak_positions = np.asarray(peak_positions, dtype=float)


@dataclass
class FringeReport:
    peak_positions: np.ndarray
    mean_spacing: float
    spacing_std: float
    visibility: float
    resolution_factor: float
    background_level: float
    n_peaks: int

    def __post_init__(self):
        self.peak_positions = np.asarray(self.peak_positions, dtype=float)
        if self.n_peaks != self.peak_positions.size:
            raise ValueError("n_peaks must match peak_positions length")
        if np.any(np.diff(self.peak_positions) <= 0):
            raise ValueError("peak positions must be strictly increasing")


def _refine_extremum(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Vertex of the parabola through (x[i-1..i+1], y[i-1..i+1])."""
    h = x[i + 1] - x[i]
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if denom == 0.0:
        return x[i]
    shift = 0.5 * (y[i - 1] - y[i + 1]) / denom
    return x[i] + shift * h


def _flanking_minimum(y: np.ndarray, lo: int, hi: int) -> int | None:
    """Index of the minimum strictly inside (lo, hi); None if unresolved.

    A minimum sitting on a segment boundary that is also a section edge means
    the pattern runs off the data, so it cannot be refined.
    """
    if hi - lo < 2:
        return None
    seg = y[lo : hi + 1]
    i = lo + int(np.argmin(seg))
    if i <= 0 or i >= y.size - 1:
        return None
    return i


def detect_peaks(
    section: CrossSection,
    min_prominence: float = 0.2,
    central_window: float | None = None,
    classical_spacing: float | None = None,
) -> FringeReport:
    """Locate fringe peaks and measure their mean spacing.

    ``min_prominence`` is a fraction of the section's value range.
    ``central_window`` (meters, full width) keeps only peaks within that
    window centered on the tallest peak, excluding envelope-suppressed outer
    fringes.  ``classical_spacing`` (lambda*z/d), when given, is the
    denominator of the reported resolution factor.
    """
    x = section.parameter
    y = section.values
    if x.size < 16:
        raise ValueError("section must have at least 16 samples")
    if not 0.0 < min_prominence < 1.0:
        raise ValueError("min_prominence must lie in (0, 1)")

    background = float(y.min())
    span = float(y.max() - y.min())
    if span == 0.0:
        raise TooFewPeaksError("section is constant; no fringes", [])

    idx, props = find_peaks(y, prominence=min_prominence * span, plateau_size=(1, None))
    # plateau maxima resolve to the plateau midpoint
    centers = 0.5 * (props["left_edges"] + props["right_edges"])

    if central_window is not None and idx.size:
        tallest = centers[int(np.argmax(y[idx]))]
        x_tall = np.interp(tallest, np.arange(x.size), x)
        keep = np.abs(np.interp(centers, np.arange(x.size), x) - x_tall) <= central_window / 2
        idx, centers = idx[keep], centers[keep]

    positions = []
    for j in range(idx.size):
        lo = idx[j - 1] if j > 0 else 0
        hi = idx[j + 1] if j < idx.size - 1 else y.size - 1
        li = _flanking_minimum(y, lo, idx[j])
        ri = _flanking_minimum(y, idx[j], hi)
        if li is None or ri is None:
            continue
        left = _refine_extremum(x, y, li)
        right = _refine_extremum(x, y, ri)
        positions.append(0.5 * (left + right))
    positions = np.sort(np.asarray(positions))

    if positions.size < 2:
        raise TooFewPeaksError(
            f"found {positions.size} usable peak(s); need at least 2 for a spacing",
            positions,
        )

    diffs = np.diff(positions)
    mean_spacing = float(diffs.mean())
    spacing_std = float(diffs.std(ddof=1)) if diffs.size > 1 else 0.0

    if central_window is not None:
        tallest_x = positions[int(np.argmax(np.interp(positions, x, y)))]
        region = np.abs(x - tallest_x) <= central_window / 2
    else:
        region = np.ones_like(x, dtype=bool)
    vmax = float(y[region].max())
    vmin = float(y[region].min())
    visibility = (vmax - vmin) / (vmax + vmin) if (vmax + vmin) > 0 else 0.0

    factor = mean_spacing / classical_spacing if classical_spacing else float("nan")
    return FringeReport(
        peak_positions=positions,
        mean_spacing=mean_spacing,
        spacing_std=spacing_std,
        visibility=visibility,
        resolution_factor=factor,
        background_level=background,
        n_peaks=int(positions.size),
    )


def measure_visibility(section: CrossSection, window: float) -> float:
    """(I_max - I_min) / (I_max + I_min) within a window centered on the maximum.

    The caller is responsible for choosing a window spanning at least two
    fringes; raw (non background-subtracted) values are used.
    """
    x = section.parameter
    y = section.values
    if window <= 0 or window > (x[-1] - x[0]):
        raise ValueError("window must be positive and fit inside the section range")
    center = x[int(np.argmax(y))]
    mask = np.abs(x - center) <= window / 2
    if not np.any(mask):
        raise ValueError("window selects no samples")
    vmax = float(y[mask].max())
    vmin = float(y[mask].min())
    if vmax + vmin == 0:
        return 0.0
    return (vmax - vmin) / (vmax + vmin)
