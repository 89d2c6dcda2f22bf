"""Per-series nuisance estimation: slope, level, augmented series, long-run variance.

The slope is least squares on first differences (levels and smooth trends
drop out of the differences up to O(1/T)); the level is the mean of the
slope-adjusted response; the long-run variance comes from either a subseries
block-difference estimator or a Yule-Walker AR plug-in on pilot-detrended
residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (
    ConfigError,
    DegenerateSupportError,
    DegenerateVarianceError,
    NonstationaryFitError,
    SingularDesignError,
)
from .kernels import epanechnikov
from .panel import PanelDataset, Series

__all__ = [
    "LrvConfig",
    "AugmentedPanel",
    "estimate_beta",
    "estimate_alpha",
    "augment_panel",
    "lrv_subseries",
    "lrv_ar_plugin",
    "local_linear_fit",
    "default_block_length",
]

_LRV_METHODS = ("subseries", "ar_plugin")


def default_block_length(T: int) -> int:
    """floor(T^(1/3)), computed so perfect cubes are not lost to FP rounding."""
    return int((T + 1e-9) ** (1.0 / 3.0) + 1e-9)


@dataclass(frozen=True)
class LrvConfig:
    """Long-run variance configuration.

    ``s_T`` is the subseries block length; None means floor(T^(1/3)) at the
    point of use. ``ar_order`` and ``pilot_bandwidth`` only matter for the
    ar_plugin method.
    """

    method: str = "subseries"
    s_T: int | None = None
    ar_order: int = 1
    pilot_bandwidth: float = 0.1

    def __post_init__(self) -> None:
        if self.method not in _LRV_METHODS:
            raise ConfigError(
                f"unknown lrv method {self.method!r}; choices: {_LRV_METHODS}"
            )
        if self.s_T is not None and self.s_T < 2:
            raise ConfigError(f"subseries length s_T={self.s_T} must be >= 2")
        if self.ar_order < 1:
            raise ConfigError(f"ar_order={self.ar_order} must be >= 1")
        if not (0.0 < self.pilot_bandwidth < 0.5):
            raise ConfigError(
                f"pilot_bandwidth={self.pilot_bandwidth} outside (0, 1/2)"
            )


@dataclass(frozen=True, eq=False)
class AugmentedPanel:
    """Estimation output: slopes, levels, variances, and the augmented series.

    ``y_aug[i]`` = y_i - alpha_i - x_i @ beta_i; each row has mean zero by
    construction of alpha.
    """

    ids: tuple[str, ...]
    beta: np.ndarray
    alpha: np.ndarray
    sigma2: np.ndarray
    y_aug: np.ndarray
    lrv: LrvConfig

    @property
    def n(self) -> int:
        return self.y_aug.shape[0]

    @property
    def T(self) -> int:
        return self.y_aug.shape[1]


def estimate_beta(series: Series) -> np.ndarray:
    """Least-squares slope on first differences of (y, x).

    Returns a d-vector. Requires d >= 1 and a well-conditioned differenced
    Gram matrix (reciprocal condition number >= 1e-12).
    """
    if series.n_covariates < 1:
        raise SingularDesignError(
            f"series {series.id!r}: no covariates, slope is undefined"
        )
    dx = np.diff(series.x, axis=0)
    dy = np.diff(series.y)
    gram = dx.T @ dx
    sv = np.linalg.svd(gram, compute_uv=False)
    if sv[0] <= 0.0 or sv[-1] / sv[0] < 1e-12:
        raise SingularDesignError(
            f"series {series.id!r}: differenced covariate design is singular "
            f"(reciprocal condition {0.0 if sv[0] <= 0 else sv[-1] / sv[0]:.2e})"
        )
    return np.linalg.solve(gram, dx.T @ dy)


def estimate_alpha(series: Series, beta: np.ndarray | None = None) -> float:
    """Mean of y - x @ beta; with d=0 simply the mean of y."""
    if series.n_covariates == 0 or beta is None or len(beta) == 0:
        return float(np.mean(series.y))
    return float(np.mean(series.y - series.x @ beta))


def lrv_subseries(
    y: np.ndarray,
    x: np.ndarray | None,
    beta: np.ndarray | None,
    s_T: int,
) -> float:
    """Subseries block-difference estimate of the long-run variance.

    With z_t = y_t - beta'x_t and block sums B_m over t = (m-1)s+1 .. ms,
    returns sum_{m=1}^{M-1} (B_{m+1} - B_m)^2 / (2 (M-1) s) where
    M = floor(T/s). The slope removes the covariate effect; differencing
    adjacent blocks removes the level and (asymptotically) the smooth trend.
    Always >= 0; zero signals degenerate input and is flagged by callers.
    """
    y = np.asarray(y, dtype=np.float64)
    T = y.shape[0]
    s = int(s_T)
    if s < 2:
        raise ConfigError(f"subseries length s_T={s} must be >= 2")
    M = T // s
    if M < 2:
        raise ConfigError(
            f"T={T} with block length s_T={s} leaves M={M} < 2 blocks"
        )
    z = y
    if x is not None and beta is not None and np.size(beta) > 0:
        z = y - np.asarray(x, dtype=np.float64) @ np.asarray(beta, dtype=np.float64)
    blocks = z[: M * s].reshape(M, s).sum(axis=1)
    d = np.diff(blocks)
    return float(d @ d / (2.0 * (M - 1) * s))


def lrv_ar_plugin(residuals: np.ndarray, order: int) -> float:
    """Yule-Walker AR(order) plug-in long-run variance of a residual sequence.

    Fits the autoregression from biased-normalization autocovariances and
    returns sigma_eta^2 / (1 - sum_k a_k)^2. Constant input has sample
    variance 0 and returns 0 (callers flag it).
    """
    r = np.asarray(residuals, dtype=np.float64)
    T = r.shape[0]
    p = int(order)
    if p < 1:
        raise ConfigError(f"ar order {p} must be >= 1")
    if T <= 10 * p:
        raise ConfigError(f"need T > 10*order, got T={T} with order={p}")
    rc = r - r.mean()
    gamma = np.array([rc[: T - k] @ rc[k:] for k in range(p + 1)]) / T
    if gamma[0] <= 0.0:
        return 0.0
    a = scipy.linalg.solve_toeplitz(gamma[:p], gamma[1 : p + 1])
    a_sum = float(a.sum())
    if abs(a_sum) >= 1.0 - 1e-6:
        raise NonstationaryFitError(
            f"AR({p}) fit is (near) nonstationary: sum of coefficients {a_sum:.6f}"
        )
    sigma_eta2 = max(float(gamma[0] - a @ gamma[1 : p + 1]), 0.0)
    return sigma_eta2 / (1.0 - a_sum) ** 2


def local_linear_fit(y: np.ndarray, bandwidth: float) -> np.ndarray:
    """Local-linear regression of y on t/T, evaluated at every t/T.

    Epanechnikov kernel; reproduces constants and linear sequences exactly,
    boundaries included.
    """
    y = np.asarray(y, dtype=np.float64)
    T = y.shape[0]
    h = float(bandwidth)
    if not (0.0 < h < 1.0):
        raise ConfigError(f"bandwidth {h} outside (0, 1)")
    times = np.arange(1, T + 1, dtype=np.float64) / T
    out = np.empty(T)
    for t0 in range(T):
        d = times - times[t0]
        k = epanechnikov(d / h)
        if np.count_nonzero(k) < 2:
            raise DegenerateSupportError(
                f"local-linear fit at t={t0 + 1}: fewer than 2 support points "
                f"for bandwidth {h} at T={T}"
            )
        s0 = k.sum()
        s1 = k @ d
        s2 = k @ (d * d)
        t0_sum = k @ y
        t1_sum = (k * d) @ y
        det = s0 * s2 - s1 * s1
        if det <= 0.0:
            raise DegenerateSupportError(
                f"local-linear fit at t={t0 + 1}: degenerate normal equations"
            )
        out[t0] = (s2 * t0_sum - s1 * t1_sum) / det
    return out


def _sigma2_for_series(
    series: Series, beta: np.ndarray, y_aug_row: np.ndarray, lrv: LrvConfig
) -> float:
    if lrv.method == "subseries":
        s = lrv.s_T if lrv.s_T is not None else default_block_length(series.n_periods)
        return lrv_subseries(series.y, series.x, beta, s)
    resid = y_aug_row - local_linear_fit(y_aug_row, lrv.pilot_bandwidth)
    return lrv_ar_plugin(resid, lrv.ar_order)


def augment_panel(panel: PanelDataset, lrv: LrvConfig | None = None) -> AugmentedPanel:
    """Estimate beta, alpha, the augmented series, and sigma2 for every series.

    d=0 panels skip the slope step. Raises DegenerateVarianceError if any
    series produces sigma2 <= 0.
    """
    if lrv is None:
        lrv = LrvConfig()
    n, T, d = panel.n, panel.T, panel.d
    beta = np.zeros((n, d))
    alpha = np.zeros(n)
    y_aug = np.zeros((n, T))
    sigma2 = np.zeros(n)
    for i, s in enumerate(panel.series):
        b = estimate_beta(s) if d >= 1 else np.zeros(0)
        a = estimate_alpha(s, b)
        row = s.y - a - (s.x @ b if d >= 1 else 0.0)
        var = _sigma2_for_series(s, b, row, lrv)
        if var <= 0.0:
            raise DegenerateVarianceError(
                f"series {s.id!r}: long-run variance estimate {var} is not positive"
            )
        beta[i] = b
        alpha[i] = a
        y_aug[i] = row
        sigma2[i] = var
    y_aug.setflags(write=False)
    beta.setflags(write=False)
    alpha.setflags(write=False)
    sigma2.setflags(write=False)
    return AugmentedPanel(
        ids=panel.ids, beta=beta, alpha=alpha, sigma2=sigma2, y_aug=y_aug, lrv=lrv
    )
