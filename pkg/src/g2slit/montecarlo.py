"""Speckle-ensemble estimator for the thermal correlation surface.

A spatially incoherent (delta-correlated) source is realized as independent
circular complex Gaussian draws at each source sample, masked by the aperture
transmission.  Each realization propagates through the far-field kernel
exp(-i k x x' / z) to the detector, and the normalized intensity correlation

    g2(x1, x2) = <I(x1) I(x2)> / (<I(x1)> <I(x2)>)

is accumulated over the ensemble.  For polarized Gaussian fields this is
1 + |g1|^2, i.e. a flat background of 1 plus the fluctuation term whose shape
is the closed form in :mod:`g2slit.analytic` -- which makes the two modules
independent cross-checks of each other.

Reproducibility contract: realization r draws from its own counter-based
substream (Philox keyed on (seed, r)), chunks of realizations are accumulated
in fixed index order, and chunk partials merge with compensated summation in
chunk order.  Results are therefore bit-identical for a fixed seed across
runs and across worker counts.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import CHUNK
from .analytic import CorrelationSurface
from .geometry import ApertureSpec, OpticalConfig, transmission

__all__ = [
    "EnsembleConfig",
    "SpeckleField",
    "G2Estimate",
    "sample_thermal_source",
    "fraunhofer_propagate",
    "fraunhofer_propagate_fft",
    "estimate_g2",
    "fluctuation_surface",
    "config_digest",
]

_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble size, seed, and worker count (0 = auto) for the estimator."""

    n_realizations: int
    rng_seed: int = 0
    workers: int = 0
    record_variance: bool = False

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("need at least one realization")
        if self.workers < 0:
            raise ValueError("workers must be >= 0 (0 selects automatically)")


@dataclass
class SpeckleField:
    """One source-plane speckle realization (complex amplitudes on the grid)."""

    samples: np.ndarray
    realization_index: int


@dataclass
class G2Estimate:
    mean_intensity_1: np.ndarray
    mean_intensity_2: np.ndarray
    correlation: CorrelationSurface
    n_used: int
    stderr: np.ndarray | None = None


def _stream(seed: int, realization: int, lane: int = 0) -> np.random.Generator:
    """Counter-based substream: independent for each (seed, realization, lane)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, realization], dtype=np.uint64)
    counter = np.array([0, 0, lane, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _speckle_block(mask: np.ndarray, seed: int, start: int, stop: int) -> np.ndarray:
    """Speckle fields for realizations [start, stop) as a (stop-start, ns) block."""
    ns = mask.size
    out = np.empty((stop - start, ns), dtype=np.complex128)
    for row, r in enumerate(range(start, stop)):
        z = _stream(seed, r).standard_normal((2, ns))
        out[row] = z[0] + 1j * z[1]
    out *= _SQRT_HALF * mask
    return out


def sample_thermal_source(
    aperture: ApertureSpec, config: OpticalConfig, realization_index: int, seed: int
) -> SpeckleField:
    """One delta-correlated speckle realization: unit-power circular Gaussian
    draws at every source sample, multiplied by the pointwise transmission."""
    mask = transmission(aperture, config.source_grid.positions)
    block = _speckle_block(mask, seed, realization_index, realization_index + 1)
    return SpeckleField(samples=block[0], realization_index=realization_index)


def _kernel_matrix(config: OpticalConfig) -> np.ndarray:
    """(n_source, n_detector) far-field kernel exp(-i k x x' / z)."""
    xs = config.source_grid.positions
    xd = config.detector_grid.positions
    k_over_z = config.wavenumber / config.distance
    return np.exp(-1j * k_over_z * np.outer(xs, xd))


def _as_samples(fld) -> np.ndarray:
    return fld.samples if isinstance(fld, SpeckleField) else np.asarray(fld)


def fraunhofer_propagate(fld, config: OpticalConfig) -> np.ndarray:
    """Direct discretized far-field transform E(x) = sum_x' e^{-ikxx'/z} f(x') dx'.

    Accepts a SpeckleField or a raw amplitude array (last axis = source grid);
    the source quadrature weight dx' is included, so refining the source grid
    converges instead of rescaling.
    """
    samples = _as_samples(fld)
    return samples @ _kernel_matrix(config) * config.source_grid.spacing


def fraunhofer_propagate_fft(fld, config: OpticalConfig) -> np.ndarray:
    """FFT fast path, valid when the detector sits on the DFT frequency comb.

    The grids align when lambda*z / (pitch * dx') is an integer N >= both grid
    sizes; otherwise this raises and the direct transform must be used.
    Agrees with :func:`fraunhofer_propagate` to ~1e-14 relative when aligned.
    """
    samples = _as_samples(fld)
    ns = config.source_grid.n_samples
    nd = config.detector_grid.n_pixels
    dxs = config.source_grid.spacing
    pitch = config.detector_grid.pixel_pitch
    n_exact = config.wavelength * config.distance / (pitch * dxs)
    n_fft = int(round(n_exact))
    if n_fft < max(ns, nd) or abs(n_exact - n_fft) > 1e-9 * n_fft:
        raise ValueError(
            "detector grid is not aligned with the DFT comb "
            f"(lambda*z/(pitch*dx') = {n_exact:.6g} is not a usable integer); "
            "use fraunhofer_propagate instead"
        )
    cs, cd = ns // 2, nd // 2
    j = np.arange(ns)
    padded = np.zeros(samples.shape[:-1] + (n_fft,), dtype=np.complex128)
    padded[..., :ns] = samples * np.exp(2j * np.pi * cd * j / n_fft)
    spectrum = np.fft.fft(padded, axis=-1)[..., :nd]
    i = np.arange(nd)
    twiddle = np.exp(2j * np.pi * cs * i / n_fft) * np.exp(-2j * np.pi * cd * cs / n_fft)
    return spectrum * twiddle * dxs


def _resolve_workers(workers: int) -> int:
    if workers > 0:
        return workers
    import os

    return min(os.cpu_count() or 1, 8)


def _chunks(n: int):
    return [(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]


def _accumulate_ensemble(jobs, workers: int, shape, with_sq: bool):
    """Run chunk jobs (possibly threaded) and merge partials in chunk order."""
    nd = shape
    s1 = np.zeros(nd)
    s2 = np.zeros(nd)
    s12 = np.zeros((nd, nd))
    sq = np.zeros((nd, nd)) if with_sq else None
    comps = [np.zeros_like(a) for a in (s1, s2, s12)]
    comp_sq = np.zeros((nd, nd)) if with_sq else None

    def merge(partial):
        p1, p2, p12, psq = partial
        _kernels.kahan_add(s1, comps[0], p1)
        _kernels.kahan_add(s2, comps[1], p2)
        _kernels.kahan_add(s12, comps[2], p12)
        if with_sq:
            _kernels.kahan_add(sq, comp_sq, psq)

    if workers == 1:
        for job in jobs:
            merge(job())
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for partial in pool.map(lambda job: job(), jobs):
                merge(partial)
    return s1, s2, s12, sq


def estimate_g2(
    aperture: ApertureSpec, config: OpticalConfig, ensemble: EnsembleConfig
) -> G2Estimate:
    """Ensemble estimate of the normalized intensity correlation surface."""
    mask = transmission(aperture, config.source_grid.positions)
    kernel_t = _kernel_matrix(config)
    dxs = config.source_grid.spacing
    pitch = config.detector_grid.pixel_pitch
    # |E|^2 per pixel, midpoint-integrated over the pixel pitch
    scale = dxs * dxs * pitch
    n = ensemble.n_realizations
    seed = ensemble.rng_seed

    def make_job(bounds):
        start, stop = bounds

        def job():
            fields = _speckle_block(mask, seed, start, stop)
            rows = _kernels.intensity_rows(fields, kernel_t, scale)
            return _kernels.accumulate_pair(rows, rows, with_sq=ensemble.record_variance)

        return job

    jobs = [make_job(b) for b in _chunks(n)]
    workers = _resolve_workers(ensemble.workers)
    s1, s2, s12, sq = _accumulate_ensemble(
        jobs, workers, config.detector_grid.n_pixels, ensemble.record_variance
    )

    m1 = s1 / n
    m2 = s2 / n
    if m1.min() <= 0.0 or m2.min() <= 0.0:
        bad = int(np.count_nonzero((m1 <= 0) | (m2 <= 0)))
        raise ValueError(
            f"mean intensity is zero at {bad} detector pixel(s); "
            "the ensemble is too small (or the aperture fully opaque) to normalize"
        )
    denom = np.outer(m1, m2)
    g2 = (s12 / n) / denom

    stderr = None
    if ensemble.record_variance:
        var_prod = sq / n - (s12 / n) ** 2
        stderr = np.sqrt(np.maximum(var_prod, 0.0) / n) / denom

    xd = config.detector_grid.positions
    surface = CorrelationSurface(
        values=g2,
        axis_x1=xd,
        axis_x2=xd.copy(),
        normalization="raw",
        provenance="monte_carlo",
        source_kind="thermal",
        meta={"seed": seed, "n_realizations": n},
    )
    return G2Estimate(
        mean_intensity_1=m1,
        mean_intensity_2=m2,
        correlation=surface,
        n_used=n,
        stderr=stderr,
    )


def fluctuation_surface(estimate: G2Estimate) -> CorrelationSurface:
    """Background-subtracted fluctuation part g2 - 1, scaled to unit peak.

    The thermal fluctuation term attains its maximum of 1 along the whole main
    diagonal (x1 = x2), so the peak scale is estimated as the diagonal mean --
    the lowest-variance unbiased estimate available from the surface itself.
    """
    g2 = estimate.correlation.values
    fluct = g2 - 1.0
    scale = float(np.mean(np.diag(fluct)))
    if scale <= 0:
        raise ValueError("diagonal of g2 - 1 is not positive; ensemble too small")
    return CorrelationSurface(
        values=fluct / scale,
        axis_x1=estimate.correlation.axis_x1,
        axis_x2=estimate.correlation.axis_x2,
        normalization="background_subtracted",
        provenance="monte_carlo",
        source_kind="thermal",
        meta=dict(estimate.correlation.meta, diagonal_scale=scale),
    )


def config_digest(aperture: ApertureSpec, config: OpticalConfig, ensemble: EnsembleConfig) -> str:
    """Stable hash of everything that determines an estimator run."""
    payload = {
        "aperture": [
            aperture.kind,
            aperture.slit_width_a,
            aperture.slit_separation_d,
        ],
        "wavelength": config.wavelength,
        "distance": config.distance,
        "source": [config.source_grid.half_extent, config.source_grid.n_samples],
        "detector": [config.detector_grid.pixel_pitch, config.detector_grid.n_pixels],
        "n": ensemble.n_realizations,
        "seed": ensemble.rng_seed,
    }
    if aperture.kind == "custom":
        payload["aperture"] = ["custom", aperture.custom_x.tolist(), aperture.custom_t.tolist()]
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
