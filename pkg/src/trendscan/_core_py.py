"""Numpy implementation of the hot kernels.

Signature-compatible with the compiled module ``trendscan._core``; the
active one is chosen in ``trendscan._backend``. Aggregation rides BLAS via a
dense (T, |grid|) weight matrix, which the compiled backend avoids.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def aggregate(values: np.ndarray, packed) -> np.ndarray:
    """Row-wise kernel sums: (m, T) x (T, G) -> (m, G)."""
    return values @ packed.dense()


def draw_max_stat(zc: np.ndarray, packed) -> float:
    """Max over series pairs and grid points of |s_i - s_j|/sqrt(2) - lambda.

    Uses the range identity max_{i<j} |s_i - s_j| = max_i s_i - min_i s_i,
    valid because the draw statistic shares one scale across series.
    """
    agg = zc @ packed.dense()
    spread = agg.max(axis=0) - agg.min(axis=0)
    return float(np.max(spread * _INV_SQRT2 - packed.lam))


def pair_corrected(
    agg: np.ndarray, denom: np.ndarray, lam: np.ndarray, pairs: np.ndarray
) -> np.ndarray:
    """Corrected pair statistics |s_i - s_j| / denom_p - lambda, shape (n_pairs, G)."""
    diff = np.abs(agg[pairs[:, 0]] - agg[pairs[:, 1]])
    return diff / denom[:, None] - lam[None, :]
