"""Multiscale pairwise trend comparison with Monte-Carlo critical values.

The corrected statistic for a series pair (i, j) at a location-scale point
(u, h) is

    psi0_ij(u, h) = |sum_t w_t(u,h) (yaug_i[t] - yaug_j[t])| /
                    sqrt(sigma2_i + sigma2_j)  -  lambda(h)

and the test rejects the local no-difference hypothesis on [u-h, u+h]
whenever psi0 exceeds the (1-alpha) Monte-Carlo quantile q of the Gaussian
reference statistic. Taking the maximum over all pairs and points gives the
global test; the familywise error over all local decisions is controlled at
alpha by construction.
"""

from __future__ import annotations

import functools
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .estimate import AugmentedPanel, LrvConfig, augment_panel
from .exceptions import ConfigError, GridError
from .kernels import packed_weights
from .panel import (
    LocationScaleGrid,
    LocationScalePoint,
    PanelDataset,
    validate_panel,
)

__all__ = [
    "PairStatistics",
    "CriticalValue",
    "TestReport",
    "GRID_PRESETS",
    "build_grid",
    "pair_statistics",
    "gaussian_statistic_draw",
    "gaussian_draw_values",
    "seed_draw_cache",
    "critical_value",
    "run_test",
    "minimal_intervals",
    "pair_index_array",
    "grid_fingerprint",
]

GRID_PRESETS = ("sim_s6", "gdp_s71", "house_s72")

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class CriticalValue:
    """Empirical (1-alpha)-quantile q of L Gaussian reference draws."""

    alpha: float
    q: float
    L: int
    seed: int


@dataclass(frozen=True, eq=False)
class PairStatistics:
    """Corrected statistics for every series pair at every grid point.

    Pairs follow the fixed lexicographic enumeration of {(i, j) : i < j};
    row p of ``psi0`` belongs to ``pairs[p]``. ``psi_max`` is the rowwise
    maximum of ``psi0``.
    """

    grid: LocationScaleGrid
    pairs: np.ndarray
    psi0: np.ndarray
    psi_max: np.ndarray


@dataclass(frozen=True, eq=False)
class TestReport:
    """Outcome of the multiscale test at one level alpha.

    ``rejections`` and ``minimal`` map id pairs (id_i, id_j) with i < j to
    tuples of LocationScalePoint, in grid order; pairs without rejections
    map to empty tuples.
    """

    __test__ = False  # not a test case despite the Test* name

    alpha: float
    critical_value: CriticalValue
    global_reject: bool
    series_ids: tuple[str, ...]
    rejections: dict[tuple[str, str], tuple[LocationScalePoint, ...]]
    minimal: dict[tuple[str, str], tuple[LocationScalePoint, ...]]
    diagnostics: dict


@functools.lru_cache(maxsize=32)
def pair_index_array(n: int) -> np.ndarray:
    """Lexicographic pair enumeration {(i, j) : 0 <= i < j < n} as an (m, 2) array."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    out = np.array(pairs, dtype=np.int64).reshape(len(pairs), 2)
    out.setflags(write=False)
    return out


def _preset_axes(T: int, preset: str) -> tuple[list[float], list[float]]:
    h_lo = math.log(T) / T
    h_hi = 0.25
    if preset == "sim_s6":
        u = [5 * t / T for t in range(1, T // 5 + 1)]
        h_raw = ((5 * t - 3) / T for t in range(1, T + 1))
    elif preset == "gdp_s71":
        u = [(8 * t + 1) / (2 * T) for t in range(1, (2 * T - 1) // 8 + 1)]
        h_raw = (4 * t / T for t in range(1, T + 1))
    elif preset == "house_s72":
        u = [t / T for t in range(1, T + 1)]
        h_raw = ((5 * t - 3) / T for t in range(1, T + 1))
    else:
        raise ConfigError(f"unknown grid preset {preset!r}; choices: {GRID_PRESETS}")
    h = [v for v in h_raw if h_lo <= v <= h_hi]
    return u, h


def build_grid(
    T: int,
    preset: str = "sim_s6",
    custom_spec: tuple | None = None,
) -> LocationScaleGrid:
    """Assemble the location-scale grid for a series length T.

    Presets pair every location in U_T with every scale in H_T and then drop
    combinations whose interval leaves [0, 1] (the dropped count is recorded
    on the grid):

    - ``sim_s6``:    U_T = {5t/T},        H_T = {(5t-3)/T} in [log T / T, 1/4]
    - ``gdp_s71``:   U_T = {(8t+1)/(2T)}, H_T = {4t/T}     in [log T / T, 1/4]
    - ``house_s72``: U_T = {t/T},         H_T = {(5t-3)/T} in [log T / T, 1/4]

    ``preset="custom"`` instead takes ``custom_spec = (u_list, h_list)``.
    """
    if T < 20:
        raise ConfigError(f"grid construction needs T >= 20, got T={T}")
    if preset == "custom":
        if custom_spec is None:
            raise ConfigError("custom grid needs custom_spec=(u_values, h_values)")
        u_values, h_values = custom_spec
        u = [float(v) for v in u_values]
        h = [float(v) for v in h_values]
    else:
        u, h = _preset_axes(T, preset)
    points = []
    dropped = 0
    for hv in h:
        for uv in u:
            if uv - hv < 0.0 or uv + hv > 1.0:
                dropped += 1
                continue
            points.append(LocationScalePoint(u=uv, h=hv))
    if not points:
        raise GridError(
            f"no grid point survives for T={T}, preset {preset!r} "
            f"({dropped} dropped by containment)"
        )
    return LocationScaleGrid(points=tuple(points), n_dropped=dropped)


def grid_fingerprint(grid: LocationScaleGrid) -> str:
    """Stable hex digest of the grid's points, used to key persisted draws."""
    text = ";".join(f"{p.u!r}:{p.h!r}" for p in grid.points)
    return hashlib.sha256(text.encode("ascii")).hexdigest()[:16]


def pair_statistics(aug: AugmentedPanel, grid: LocationScaleGrid) -> PairStatistics:
    """Corrected pair statistics from per-series kernel aggregates.

    The pair sum factorizes as s_i - s_j with s_i = sum_t w_t yaug_i[t], so
    the kernel work is O(n) rather than O(n^2) per grid point.
    """
    if np.any(aug.sigma2 <= 0.0):
        raise ConfigError("pair statistics need strictly positive sigma2")
    packed = packed_weights(aug.T, grid)
    agg = _backend.aggregate(np.ascontiguousarray(aug.y_aug), packed)
    pairs = pair_index_array(aug.n)
    denom = np.sqrt(aug.sigma2[pairs[:, 0]] + aug.sigma2[pairs[:, 1]])
    psi0 = _backend.pair_corrected(agg, denom, packed.lam, pairs)
    psi_max = psi0.max(axis=1)
    psi0.setflags(write=False)
    psi_max.setflags(write=False)
    return PairStatistics(grid=grid, pairs=pairs, psi0=psi0, psi_max=psi_max)


def gaussian_statistic_draw(
    n: int, T: int, grid: LocationScaleGrid, rng: np.random.Generator
) -> float:
    """One draw of the Gaussian reference statistic.

    Draws n*T standard normals, centers each row, and returns the maximum
    over pairs and grid points of |s_i - s_j| / sqrt(2) - lambda(h). The
    equal-variance form makes the draw independent of the data.
    """
    z = rng.standard_normal((n, T))
    z -= z.mean(axis=1, keepdims=True)
    packed = packed_weights(T, grid)
    return _backend.draw_max_stat(z, packed)


def _draw_rng(seed: int, ell: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ell,)))


_DRAW_CACHE: dict[tuple, np.ndarray] = {}


def gaussian_draw_values(
    n: int, T: int, grid: LocationScaleGrid, L: int, seed: int
) -> np.ndarray:
    """L sorted Gaussian reference draws, deterministic in (seed, ell) per draw.

    Cached in-process; the CLI additionally persists these to a cache file.
    """
    key = (n, T, grid, L, seed)
    hit = _DRAW_CACHE.get(key)
    if hit is None:
        values = np.empty(L)
        for ell in range(L):
            values[ell] = gaussian_statistic_draw(n, T, grid, _draw_rng(seed, ell))
        values.sort()
        values.setflags(write=False)
        _DRAW_CACHE[key] = hit = values
    return hit


def seed_draw_cache(
    n: int, T: int, grid: LocationScaleGrid, L: int, seed: int, values: np.ndarray
) -> None:
    """Inject previously persisted draws into the in-process cache."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.shape != (L,):
        raise ConfigError(f"expected {L} cached draws, got shape {arr.shape}")
    arr.setflags(write=False)
    _DRAW_CACHE[(n, T, grid, L, seed)] = arr


def _quantile_index(alpha: float, L: int) -> int:
    # ceil((1-alpha) L)-th order statistic; the 1e-9 guards against FP noise
    # pushing an exact integer up one slot (e.g. 0.9 * 1000)
    k = math.ceil((1.0 - alpha) * L - 1e-9)
    return min(max(k, 1), L)


def critical_value(
    n: int,
    T: int,
    grid: LocationScaleGrid,
    alpha: float,
    L: int = 2000,
    seed: int = 0,
) -> CriticalValue:
    """Monte-Carlo critical value: the ceil((1-alpha)L)-th order statistic."""
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha={alpha} outside (0, 1)")
    if L < 100:
        raise ConfigError(f"need at least 100 Monte-Carlo draws, got L={L}")
    draws = gaussian_draw_values(n, T, grid, L, seed)
    q = float(draws[_quantile_index(alpha, L) - 1])
    return CriticalValue(alpha=float(alpha), q=q, L=L, seed=seed)


def minimal_intervals(points) -> tuple[LocationScalePoint, ...]:
    """Members whose interval strictly contains no other member's interval.

    Input order is preserved. Containment is checked with a 1e-12 slack so
    grid arithmetic noise cannot flip a boundary case.
    """
    pts = list(points)
    tol = 1e-12
    keep = []
    for a in pts:
        lo_a, hi_a = a.u - a.h, a.u + a.h
        contains_other = False
        for b in pts:
            if b is a:
                continue
            lo_b, hi_b = b.u - b.h, b.u + b.h
            inside = lo_b >= lo_a - tol and hi_b <= hi_a + tol
            strict = lo_b > lo_a + tol or hi_b < hi_a - tol
            if inside and strict:
                contains_other = True
                break
        if not contains_other:
            keep.append(a)
    return tuple(keep)


def _rejection_sets(
    stats: PairStatistics, ids: tuple[str, ...], q: float
) -> tuple[dict, dict]:
    rejections: dict[tuple[str, str], tuple[LocationScalePoint, ...]] = {}
    minimal: dict[tuple[str, str], tuple[LocationScalePoint, ...]] = {}
    for p in range(stats.pairs.shape[0]):
        i, j = int(stats.pairs[p, 0]), int(stats.pairs[p, 1])
        key = (ids[i], ids[j])
        hits = np.flatnonzero(stats.psi0[p] > q)
        pts = tuple(stats.grid.points[k] for k in hits)
        rejections[key] = pts
        minimal[key] = minimal_intervals(pts)
    return rejections, minimal


def run_test(
    panel: PanelDataset,
    grid: LocationScaleGrid,
    alpha: float = 0.05,
    lrv: LrvConfig | None = None,
    L: int = 2000,
    seed: int = 0,
) -> TestReport:
    """Full pipeline: augment, pair statistics, critical value, decisions.

    Rejection is strict (psi0 > q). The global decision equals "some pair
    has a nonempty rejection set".
    """
    panel = validate_panel(panel)
    aug = augment_panel(panel, lrv)
    stats = pair_statistics(aug, grid)
    cv = critical_value(panel.n, panel.T, grid, alpha, L, seed)
    rejections, minimal = _rejection_sets(stats, aug.ids, cv.q)
    psi_hat = float(stats.psi_max.max())
    report = TestReport(
        alpha=float(alpha),
        critical_value=cv,
        global_reject=bool(psi_hat > cv.q),
        series_ids=aug.ids,
        rejections=rejections,
        minimal=minimal,
        diagnostics={
            "n": panel.n,
            "T": panel.T,
            "d": panel.d,
            "grid_size": len(grid),
            "grid_dropped": grid.n_dropped,
            "psi_hat_max": psi_hat,
            "sigma2": [float(v) for v in aug.sigma2],
            "sigma2_min": float(aug.sigma2.min()),
            "sigma2_max": float(aug.sigma2.max()),
            "lrv_method": aug.lrv.method,
            "backend": _backend.active_backend(),
        },
    )
    return report
