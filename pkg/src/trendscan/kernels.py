"""Epanechnikov kernel, local-linear weights, scale correction, kernel aggregates.

The weight construction follows the local-linear form

    w_t = Lambda_t / (sum_s Lambda_s^2)^(1/2)
    Lambda_t = K(((t/T) - u) / h) * [S_2 - ((t/T - u)/h) * S_1]
    S_l = (T h)^(-1) sum_t K(((t/T) - u)/h) * ((t/T - u)/h)^l,   l = 1, 2

with t running over 1..T and K compactly supported on [-1, 1]. Weights are
stored dense only on the support window {t : |t/T - u| <= h}; the zero tails
are implicit. Aggregation over a whole grid is delegated to the active
backend (compiled or numpy, see _backend).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .exceptions import DegenerateSupportError, DomainError
from .panel import LocationScaleGrid, LocationScalePoint

__all__ = [
    "epanechnikov",
    "local_linear_weights",
    "lambda_correction",
    "aggregate_series",
    "WeightVector",
    "KernelAggregateTable",
]


def epanechnikov(x):
    """Epanechnikov kernel 0.75*(1 - x^2) on [-1, 1], zero outside.

    Accepts a scalar or an ndarray; returns the same shape. Non-negative and
    symmetric on its compact support.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = np.where(np.abs(arr) <= 1.0, 0.75 * (1.0 - arr * arr), 0.0)
    if np.ndim(x) == 0:
        return float(out)
    return out


def lambda_correction(h: float) -> float:
    """Scale-dependent correction sqrt(2 * log(1 / (2h))) for h in (0, 1/2].

    h = 1/2 is permitted and gives 0.
    """
    h = float(h)
    if not (0.0 < h <= 0.5) or not math.isfinite(h):
        raise DomainError(f"lambda correction needs h in (0, 1/2], got {h}")
    return math.sqrt(2.0 * math.log(1.0 / (2.0 * h)))


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Local-linear weights for one grid point, dense on the support window.

    ``start_t`` is the 1-based time index of the first entry; entry j belongs
    to t = start_t + j. Outside the window all weights are zero.
    """

    point: LocationScalePoint
    start_t: int
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class KernelAggregateTable:
    """Per-series kernel sums: entry (i, k) = sum_t w_t(u_k, h_k) * a_it."""

    grid: LocationScaleGrid
    values: np.ndarray


def _support_window(T: int, u: float, h: float) -> tuple[int, int]:
    # 1-based inclusive window of {t : |t/T - u| <= h}; the 1e-9 slack keeps
    # exact-boundary points (where K = 0 anyway) from flapping on FP noise
    lo = max(1, int(math.ceil((u - h) * T - 1e-9)))
    hi = min(T, int(math.floor((u + h) * T + 1e-9)))
    return lo, hi


def _window_weights(T: int, u: float, h: float, kernel) -> tuple[int, np.ndarray]:
    lo, hi = _support_window(T, u, h)
    if lo > hi:
        raise DegenerateSupportError(
            f"empty kernel support for (u={u}, h={h}) at T={T}"
        )
    t = np.arange(lo, hi + 1, dtype=np.float64)
    x = (t / T - u) / h
    k = np.asarray(kernel(x), dtype=np.float64)
    s1 = (k @ x) / (T * h)
    s2 = (k @ (x * x)) / (T * h)
    lam_t = k * (s2 - x * s1)
    norm2 = lam_t @ lam_t
    if norm2 <= 0.0:
        raise DegenerateSupportError(
            f"degenerate kernel support for (u={u}, h={h}) at T={T}: "
            "all local-linear weights vanish"
        )
    return lo, lam_t / math.sqrt(norm2)


def local_linear_weights(
    T: int, point: LocationScalePoint, kernel=epanechnikov
) -> WeightVector:
    """Weights w_t(u, h) for one grid point; sum of squares is 1 by construction."""
    start, w = _window_weights(int(T), point.u, point.h, kernel)
    w = w.copy()
    w.setflags(write=False)
    return WeightVector(point=point, start_t=start, weights=w)


class PackedWeights:
    """All grid weights concatenated for fast aggregation.

    ``starts`` holds 0-based column offsets into a (m, T) value matrix;
    grid point k owns weights[offsets[k]:offsets[k+1]]. ``lam`` carries the
    scale correction per point. Built once per (T, grid, kernel) and cached.
    """

    __slots__ = ("T", "grid", "starts", "offsets", "weights", "lam", "_dense")

    def __init__(self, T: int, grid: LocationScaleGrid, kernel=epanechnikov):
        starts = np.empty(len(grid), dtype=np.int64)
        offsets = np.empty(len(grid) + 1, dtype=np.int64)
        chunks = []
        offsets[0] = 0
        for k, p in enumerate(grid.points):
            start, w = _window_weights(T, p.u, p.h, kernel)
            starts[k] = start - 1
            offsets[k + 1] = offsets[k] + w.shape[0]
            chunks.append(w)
        self.T = T
        self.grid = grid
        self.starts = starts
        self.offsets = offsets
        self.weights = np.concatenate(chunks)
        self.lam = np.array([lambda_correction(p.h) for p in grid.points])
        self._dense = None

    def dense(self) -> np.ndarray:
        """(T, |grid|) weight matrix for BLAS-based aggregation."""
        if self._dense is None:
            mat = np.zeros((self.T, len(self.grid)), dtype=np.float64)
            for k in range(len(self.grid)):
                a, b = self.offsets[k], self.offsets[k + 1]
                mat[self.starts[k] : self.starts[k] + (b - a), k] = self.weights[a:b]
            self._dense = mat
        return self._dense


@functools.lru_cache(maxsize=16)
def packed_weights(T: int, grid: LocationScaleGrid, kernel=epanechnikov) -> PackedWeights:
    return PackedWeights(T, grid, kernel)


def aggregate_series(
    panel_values: np.ndarray, grid: LocationScaleGrid, kernel=epanechnikov
) -> KernelAggregateTable:
    """Kernel sums of each row of ``panel_values`` at every grid point.

    Equals the naive double loop sum_t w_t(u_k, h_k) * a_it, computed in
    O(n * total support size) through the active backend.
    """
    values = np.ascontiguousarray(panel_values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"panel values must be 2-D (n, T), got shape {values.shape}")
    packed = packed_weights(values.shape[1], grid, kernel)
    out = _backend.aggregate(values, packed)
    return KernelAggregateTable(grid=grid, values=out)
