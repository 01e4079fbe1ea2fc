"""Hot numeric kernels: far-field propagation and correlation accumulation.

Two interchangeable backends:

* ``numba`` (default when importable): @njit(nogil=True) kernels, fused
  intensity/accumulation loops, BLAS matmul via np.dot inside the jit.
* ``numpy``: pure BLAS/ufunc path.

Selection: set ``G2SLIT_KERNELS=numpy`` (or ``numba``) in the environment;
unset means numba when available.  Both backends are deterministic for fixed
inputs; they agree to floating-point roundoff, not bitwise, so pick one
backend per run when bit-reproducibility matters (seed determinism is
guaranteed within a backend, across runs and worker counts).

``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "CHUNK",
    "intensity_rows",
    "accumulate_pair",
    "kahan_add",
    "intensity_rows_numpy",
    "accumulate_pair_numpy",
]

# Fixed chunk of realizations per accumulation step.  Chunk boundaries are a
# constant of the implementation (never derived from the worker count) so the
# ordered chunk merge gives bit-identical results for any worker count.
CHUNK = 512


def _select_backend() -> str:
    choice = os.environ.get("G2SLIT_KERNELS", "").strip().lower()
    if choice in ("numpy", "python"):
        return "numpy"
    if choice == "numba":
        import numba  # noqa: F401  (raise early if requested but missing)

        return "numba"
    if choice:
        raise ValueError(f"G2SLIT_KERNELS must be 'numba' or 'numpy', got {choice!r}")
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


BACKEND = _select_backend()


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def intensity_rows_numpy(fields: np.ndarray, kernel_t: np.ndarray, scale: float) -> np.ndarray:
    """Detector intensity rows |fields @ kernel_t|^2 * scale, one row per realization."""
    e = fields @ kernel_t
    return (e.real * e.real + e.imag * e.imag) * scale


def accumulate_pair_numpy(rows1, rows2, with_sq=False):
    """Per-chunk partial sums: (sum I1, sum I2, sum I1*I2 outer[, sum (I1*I2)^2])."""
    s1 = rows1.sum(axis=0)
    s2 = rows2.sum(axis=0)
    s12 = rows1.T @ rows2
    if not with_sq:
        return s1, s2, s12, None
    sq = (rows1 * rows1).T @ (rows2 * rows2)
    return s1, s2, s12, sq


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit

    @njit(nogil=True)
    def _intensity_rows_nb(fields, kernel_t, scale):
        e = np.dot(fields, kernel_t)
        n, nd = e.shape
        out = np.empty((n, nd))
        for i in range(n):
            for p in range(nd):
                v = e[i, p]
                out[i, p] = (v.real * v.real + v.imag * v.imag) * scale
        return out

    @njit(nogil=True)
    def _accumulate_pair_nb(rows1, rows2, with_sq):
        n, nd = rows1.shape
        s1 = np.zeros(nd)
        s2 = np.zeros(nd)
        s12 = np.zeros((nd, nd))
        sq = np.zeros((nd, nd)) if with_sq else np.zeros((1, 1))
        for i in range(n):
            for p in range(nd):
                s1[p] += rows1[i, p]
                s2[p] += rows2[i, p]
            for p in range(nd):
                rp = rows1[i, p]
                for q in range(nd):
                    s12[p, q] += rp * rows2[i, q]
            if with_sq:
                for p in range(nd):
                    rp = rows1[i, p]
                    for q in range(nd):
                        v = rp * rows2[i, q]
                        sq[p, q] += v * v
        return s1, s2, s12, sq

    def intensity_rows(fields, kernel_t, scale):
        return _intensity_rows_nb(
            np.ascontiguousarray(fields), np.ascontiguousarray(kernel_t), float(scale)
        )

    def accumulate_pair(rows1, rows2, with_sq=False):
        s1, s2, s12, sq = _accumulate_pair_nb(
            np.ascontiguousarray(rows1), np.ascontiguousarray(rows2), bool(with_sq)
        )
        return s1, s2, s12, (sq if with_sq else None)

else:
    intensity_rows = intensity_rows_numpy
    accumulate_pair = accumulate_pair_numpy


def kahan_add(total: np.ndarray, comp: np.ndarray, term: np.ndarray) -> None:
    """In-place compensated accumulation total += term (Kahan)."""
    y = term - comp
    t = total + y
    comp[...] = (t - total) - y
    total[...] = t
