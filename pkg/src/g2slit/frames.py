"""Synthetic CCD pipeline: per-realization detector rows, persisted and
correlated from storage.

Each frame is one speckle realization integrated over detector pixels
(midpoint rule at pixel centers: fringe periods are hundreds of pixels, so
midpoint sampling is far below measurement tolerances).  The two stacks share
one speckle field per frame -- an ideal 50/50 splitter with unit efficiency --
so with noise disabled the stacks are identical and the whole pipeline
reproduces :func:`g2slit.montecarlo.estimate_g2` bit for bit when fed the
same seed, which is the point: stored frames are an end-to-end oracle for the
in-memory estimator.

Optional Poisson noise converts each pixel to photon counts scaled so the
ensemble-mean pixel sees ``mean_photons`` counts; the two stacks draw
independent noise (separate substream lanes).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import CHUNK
from .analytic import CorrelationSurface
from .geometry import ApertureSpec, OpticalConfig, centered_positions, transmission
from .montecarlo import EnsembleConfig, _chunks, _kernel_matrix, _resolve_workers, _speckle_block, _stream

__all__ = ["FrameStack", "synthesize_frames", "correlate_frames", "save_stack", "load_stack"]

_MAGIC = b"G2FS"
_VERSION = 1


@dataclass
class FrameStack:
    """Stack of 1-D detector intensity rows plus acquisition metadata."""

    frames: np.ndarray
    pixel_pitch: float
    exposure_tag: str = "synthetic"
    seed_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.ascontiguousarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValueError("frames must be a (n_frames, n_pixels) array")
        if np.any(self.frames < 0):
            raise ValueError("frame intensities must be non-negative")
        if self.pixel_pitch <= 0:
            raise ValueError("pixel pitch must be > 0")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.frames.shape[1]


def synthesize_frames(
    aperture: ApertureSpec,
    config: OpticalConfig,
    ensemble: EnsembleConfig,
    noise: str = "none",
    mean_photons: float = 1e4,
) -> tuple[FrameStack, FrameStack]:
    """Generate paired frame stacks, one per detector arm.

    ``noise="poisson"`` replaces intensities with Poisson counts at
    ``mean_photons`` expected counts per pixel (the delta-correlated source
    gives a flat mean profile, so one scale serves every pixel).
    """
    if noise not in ("none", "poisson"):
        raise ValueError("noise must be 'none' or 'poisson'")
    mask = transmission(aperture, config.source_grid.positions)
    kernel_t = _kernel_matrix(config)
    dxs = config.source_grid.spacing
    scale = dxs * dxs * config.detector_grid.pixel_pitch
    n = ensemble.n_realizations
    seed = ensemble.rng_seed

    if noise == "poisson":
        mean_level = float(np.sum(mask**2)) * scale  # flat <I> of the masked source
        if mean_level <= 0:
            raise ValueError("aperture admits no light; cannot scale photon counts")
        photon_gain = mean_photons / mean_level

    def make_job(bounds):
        start, stop = bounds

        def job():
            fields = _speckle_block(mask, seed, start, stop)
            rows = _kernels.intensity_rows(fields, kernel_t, scale)
            if noise == "none":
                return rows, rows.copy()
            out1 = np.empty_like(rows)
            out2 = np.empty_like(rows)
            for i, r in enumerate(range(start, stop)):
                lam = rows[i] * photon_gain
                out1[i] = _stream(seed, r, lane=1).poisson(lam)
                out2[i] = _stream(seed, r, lane=2).poisson(lam)
            return out1, out2

        return job

    jobs = [make_job(b) for b in _chunks(n)]
    workers = _resolve_workers(ensemble.workers)
    if workers == 1:
        parts = [job() for job in jobs]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: job(), jobs))

    frames1 = np.vstack([p[0] for p in parts])
    frames2 = np.vstack([p[1] for p in parts])
    meta = {"seed": seed, "n_realizations": n, "noise": noise}
    if noise == "poisson":
        meta["mean_photons"] = mean_photons
    pitch = config.detector_grid.pixel_pitch
    return (
        FrameStack(frames1, pitch, exposure_tag="synthetic", seed_metadata=dict(meta, arm=1)),
        FrameStack(frames2, pitch, exposure_tag="synthetic", seed_metadata=dict(meta, arm=2)),
    )


def correlate_frames(stack1: FrameStack, stack2: FrameStack) -> CorrelationSurface:
    """Normalized correlation g2(x1, x2) = <I1(x1) I2(x2)> / (<I1(x1)><I2(x2)>).

    Frames are accumulated in the same fixed chunk order as the in-memory
    estimator, so matched inputs give identical output.
    """
    if stack1.frames.shape != stack2.frames.shape:
        raise ValueError("stacks must have equal frame counts and pixel counts")
    if stack1.pixel_pitch != stack2.pixel_pitch:
        raise ValueError("stacks must share one pixel pitch")
    n, nd = stack1.frames.shape

    s1 = np.zeros(nd)
    s2 = np.zeros(nd)
    s12 = np.zeros((nd, nd))
    comps = [np.zeros(nd), np.zeros(nd), np.zeros((nd, nd))]
    for start, stop in _chunks(n):
        p1, p2, p12, _ = _kernels.accumulate_pair(
            stack1.frames[start:stop], stack2.frames[start:stop]
        )
        _kernels.kahan_add(s1, comps[0], p1)
        _kernels.kahan_add(s2, comps[1], p2)
        _kernels.kahan_add(s12, comps[2], p12)

    m1 = s1 / n
    m2 = s2 / n
    if m1.min() <= 0.0 or m2.min() <= 0.0:
        bad = int(np.count_nonzero((m1 <= 0) | (m2 <= 0)))
        raise ValueError(f"mean intensity is zero at {bad} pixel(s); cannot normalize")
    g2 = (s12 / n) / np.outer(m1, m2)

    axis = centered_positions(nd, stack1.pixel_pitch)
    return CorrelationSurface(
        values=g2,
        axis_x1=axis,
        axis_x2=axis.copy(),
        normalization="raw",
        provenance="monte_carlo",
        source_kind="thermal",
        meta={"n_frames": n, **stack1.seed_metadata},
    )


# ---------------------------------------------------------------------------
# binary container: magic, version, counts, pitch, JSON metadata, f64 rows
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sHQQdI")


def save_stack(stack: FrameStack, path) -> None:
    meta = json.dumps(
        {"exposure_tag": stack.exposure_tag, "seed_metadata": stack.seed_metadata},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(_MAGIC, _VERSION, stack.n_frames, stack.n_pixels, stack.pixel_pitch, len(meta))
        )
        fh.write(meta)
        fh.write(np.ascontiguousarray(stack.frames, dtype="<f8").tobytes())


def load_stack(path) -> FrameStack:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError(f"{path}: truncated frame-stack header")
        magic, version, n_frames, n_pixels, pitch, meta_len = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a frame-stack file (bad magic)")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported frame-stack version {version}")
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        data = fh.read(n_frames * n_pixels * 8)
        if len(data) != n_frames * n_pixels * 8:
            raise ValueError(f"{path}: truncated frame data")
    frames = np.frombuffer(data, dtype="<f8").reshape(n_frames, n_pixels).copy()
    return FrameStack(
        frames=frames,
        pixel_pitch=pitch,
        exposure_tag=meta.get("exposure_tag", ""),
        seed_metadata=meta.get("seed_metadata", {}),
    )


def export_stack_csv(stack: FrameStack, path, max_values: int = 1 << 22) -> None:
    """Frame-per-row CSV for small stacks."""
    if stack.frames.size > max_values:
        raise ValueError(f"CSV export capped at {max_values} values, stack has {stack.frames.size}")
    np.savetxt(path, stack.frames, fmt="%.17g", delimiter=",")
