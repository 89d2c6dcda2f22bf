"""Synthetic panel generators and the size / power / clustering experiments.

The generator produces Y_it = m_i(t/T) + beta * X_it + eps_it with AR(1)
errors and (optionally) one AR(1) covariate, no fixed effects. Scenarios:

- ``null``:      every trend is zero
- ``power``:     series 1 gets the tilted trend b * (u - 1/2), the rest zero
- ``clusters3``: 15 series in three blocks of five with trends 0, (u - 1/2),
                 -(u - 1/2); no covariate

Experiments run replicates on deterministic per-replicate RNG streams, so
results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .cluster import classification_errors, estimate_num_groups, hac_tree, partition_at
from .estimate import LrvConfig, augment_panel
from .exceptions import ConfigError, DomainError
from .multiscale import build_grid, gaussian_draw_values, pair_statistics, _quantile_index
from .panel import PanelDataset, Series, validate_panel

__all__ = [
    "DgpConfig",
    "ExperimentResult",
    "simulate_ar1",
    "generate_panel",
    "replicate_rng",
    "run_size_experiment",
    "run_power_experiment",
    "run_clustering_experiment",
]

_SCENARIOS = ("null", "power", "clusters3")

# fixed stream tags so the three experiments never share replicate streams
_TAGS = {"size": 1, "power": 2, "clustering": 3}

_CLUSTERS3_TRUTH = (tuple(range(0, 5)), tuple(range(5, 10)), tuple(range(10, 15)))


@dataclass(frozen=True)
class DgpConfig:
    """Data-generating process settings.

    ``b`` is the trend slope for the power scenario. ``clusters3`` forces
    n = 15 and d = 0 regardless of what was passed.
    """

    scenario: str = "null"
    n: int = 15
    T: int = 100
    d: int = 1
    b: float = 1.0
    err_ar: float = 0.25
    err_innov_sd: float = 0.5
    cov_ar: float = 0.5
    cov_innov_sd: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.scenario not in _SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; choices: {_SCENARIOS}"
            )
        if self.scenario == "clusters3":
            object.__setattr__(self, "n", 15)
            object.__setattr__(self, "d", 0)
        if self.n < 2:
            raise ConfigError(f"n={self.n} must be >= 2")
        if self.T < 2:
            raise ConfigError(f"T={self.T} must be >= 2")
        if self.d not in (0, 1):
            raise ConfigError(f"d={self.d} must be 0 or 1")
        if not (abs(self.err_ar) < 1.0 and abs(self.cov_ar) < 1.0):
            raise ConfigError("AR coefficients must lie strictly inside (-1, 1)")
        if self.err_innov_sd <= 0.0 or self.cov_innov_sd <= 0.0:
            raise ConfigError("innovation standard deviations must be positive")


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Per-cell rates with Monte-Carlo standard errors.

    ``cells`` is keyed (T, alpha) for size and clustering, (T, alpha, b) for
    power; ``histograms`` (clustering only) maps (T, alpha) to count tables.
    """

    kind: str
    config: dict
    replicates: int
    cells: dict[tuple, dict[str, float]]
    histograms: dict[tuple, dict[str, dict[int, int]]] | None = None


def simulate_ar1(
    T: int, a: float, innov_sd: float, rng: np.random.Generator
) -> np.ndarray:
    """Stationary AR(1) path: x_1 ~ N(0, sd^2/(1-a^2)), then x_t = a x_{t-1} + eta_t."""
    if not abs(a) < 1.0:
        raise DomainError(f"AR coefficient a={a} must satisfy |a| < 1")
    if innov_sd <= 0.0:
        raise DomainError(f"innovation sd {innov_sd} must be positive")
    x0 = rng.normal(0.0, innov_sd / math.sqrt(1.0 - a * a))
    path = np.empty(int(T))
    path[0] = x0
    if T > 1:
        innov = rng.normal(0.0, innov_sd, int(T) - 1)
        path[1:] = lfilter([1.0], [1.0, -a], innov, zi=np.array([a * x0]))[0]
    return path


def _trend(cfg: DgpConfig, i: int, u: np.ndarray) -> np.ndarray:
    if cfg.scenario == "power" and i == 0:
        return cfg.b * (u - 0.5)
    if cfg.scenario == "clusters3":
        if 5 <= i < 10:
            return u - 0.5
        if i >= 10:
            return -(u - 0.5)
    return np.zeros_like(u)


def generate_panel(cfg: DgpConfig, rng: np.random.Generator) -> PanelDataset:
    """Draw one panel. RNG consumption order is fixed (covariate then errors,
    series by series), so scenarios differing only in the trend share noise
    when given the same stream."""
    u = np.arange(1, cfg.T + 1, dtype=np.float64) / cfg.T
    series = []
    for i in range(cfg.n):
        x = None
        if cfg.d == 1:
            x = simulate_ar1(cfg.T, cfg.cov_ar, cfg.cov_innov_sd, rng)
        eps = simulate_ar1(cfg.T, cfg.err_ar, cfg.err_innov_sd, rng)
        y = _trend(cfg, i, u) + eps
        if x is not None:
            y = y + cfg.beta * x
        series.append(Series(id=f"s{i + 1:02d}", y=y, x=x))
    return validate_panel(series)


def replicate_rng(master_seed: int, tag: int, r: int) -> np.random.Generator:
    """Independent stream for replicate r of one experiment kind."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(tag, r))
    )


def _config_echo(cfg: DgpConfig, **extra) -> dict:
    echo = {
        "scenario": cfg.scenario,
        "n": cfg.n,
        "T_default": cfg.T,
        "d": cfg.d,
        "err_ar": cfg.err_ar,
        "err_innov_sd": cfg.err_innov_sd,
        "cov_ar": cfg.cov_ar,
        "cov_innov_sd": cfg.cov_innov_sd,
        "beta": cfg.beta,
    }
    echo.update(extra)
    return echo


def _quantiles_by_alpha(
    n: int, T: int, grid, alphas, L: int, seed: int
) -> dict[float, float]:
    draws = gaussian_draw_values(n, T, grid, L, seed)
    return {a: float(draws[_quantile_index(a, L) - 1]) for a in alphas}


def _psi_hat_max(panel: PanelDataset, grid, lrv: LrvConfig) -> float:
    aug = augment_panel(panel, lrv)
    return float(pair_statistics(aug, grid).psi_max.max())


def _reject_batch(args) -> np.ndarray:
    """Worker: global rejection indicators for a contiguous replicate range.

    Returns an int array (len(bs), len(alphas)) of rejection counts summed
    over the range; bs is (None,) for the null scenario.
    """
    (cfg, grid, alphas, qs, lrv, bs, tag, seed, r_start, r_stop) = args
    counts = np.zeros((len(bs), len(alphas)), dtype=np.int64)
    for r in range(r_start, r_stop):
        for bi, b in enumerate(bs):
            run_cfg = cfg if b is None else replace(cfg, b=b)
            rng = replicate_rng(seed, tag, r)
            panel = generate_panel(run_cfg, rng)
            psi_hat = _psi_hat_max(panel, grid, lrv)
            for ai, a in enumerate(alphas):
                if psi_hat > qs[a]:
                    counts[bi, ai] += 1
    return counts


def _cluster_batch(args) -> dict:
    """Worker: clustering outcome counts for a contiguous replicate range."""
    (cfg, grid, alphas, qs, lrv, tag, seed, r_start, r_stop) = args
    out = {
        a: {"nhat3": 0, "exact": 0, "errors_total": 0, "nhat": {}, "errors": {}}
        for a in alphas
    }
    for r in range(r_start, r_stop):
        rng = replicate_rng(seed, tag, r)
        panel = generate_panel(cfg, rng)
        aug = augment_panel(panel, lrv)
        stats = pair_statistics(aug, grid)
        tree = hac_tree(stats.psi_max, panel.n)
        for a in alphas:
            n_hat = estimate_num_groups(tree, stats.psi_max, qs[a])
            parts = partition_at(tree, n_hat)
            errors = classification_errors(parts, _CLUSTERS3_TRUTH)
            cell = out[a]
            if n_hat == 3:
                cell["nhat3"] += 1
            if parts == _CLUSTERS3_TRUTH:
                cell["exact"] += 1
            cell["errors_total"] += errors
            cell["nhat"][n_hat] = cell["nhat"].get(n_hat, 0) + 1
            cell["errors"][errors] = cell["errors"].get(errors, 0) + 1
    return out


def _run_batches(worker, arg_tuples, workers: int):
    if workers <= 1 or len(arg_tuples) <= 1:
        return [worker(a) for a in arg_tuples]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, arg_tuples))


def _chunks(replicates: int, workers: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(workers, replicates)) if workers > 1 else 1
    size = math.ceil(replicates / n_chunks)
    return [(lo, min(lo + size, replicates)) for lo in range(0, replicates, size)]


def _mc_se(p: float, r: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / r)


def _rate_experiment(
    kind: str,
    cfg: DgpConfig,
    Ts,
    alphas,
    bs,
    replicates: int,
    L: int,
    seed: int,
    lrv: LrvConfig,
    workers: int,
    grid_preset: str,
) -> ExperimentResult:
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    alphas = [float(a) for a in alphas]
    tag = _TAGS[kind]
    cells: dict[tuple, dict[str, float]] = {}
    for T in Ts:
        grid = build_grid(T, grid_preset)
        run_cfg = replace(cfg, T=int(T))
        qs = _quantiles_by_alpha(cfg.n, int(T), grid, alphas, L, seed)
        args = [
            (run_cfg, grid, alphas, qs, lrv, bs, tag, seed, lo, hi)
            for lo, hi in _chunks(replicates, workers)
        ]
        total = sum(_run_batches(_reject_batch, args, workers))
        for bi, b in enumerate(bs):
            for ai, a in enumerate(alphas):
                rate = total[bi, ai] / replicates
                key = (int(T), a) if b is None else (int(T), a, float(b))
                cells[key] = {
                    "reject_rate": float(rate),
                    "mc_se": _mc_se(rate, replicates),
                    "critical_value": qs[a],
                }
    extra = {
        "grid_preset": grid_preset,
        "L": L,
        "seed": seed,
        "lrv_method": lrv.method,
        "Ts": [int(T) for T in Ts],
        "alphas": alphas,
    }
    if bs != (None,):
        extra["bs"] = [float(b) for b in bs]
    return ExperimentResult(
        kind=kind,
        config=_config_echo(cfg, **extra),
        replicates=replicates,
        cells=cells,
    )


def run_size_experiment(
    Ts,
    alphas,
    replicates: int = 1000,
    L: int = 2000,
    seed: int = 0,
    lrv: LrvConfig | None = None,
    workers: int = 1,
) -> ExperimentResult:
    """Global rejection rate under the null for each (T, alpha) cell."""
    lrv = lrv or LrvConfig()
    cfg = DgpConfig(scenario="null", n=15, d=1)
    return _rate_experiment(
        "size", cfg, Ts, alphas, (None,), replicates, L, seed, lrv, workers, "sim_s6"
    )


def run_power_experiment(
    Ts,
    alphas,
    bs,
    replicates: int = 1000,
    L: int = 2000,
    seed: int = 0,
    lrv: LrvConfig | None = None,
    workers: int = 1,
) -> ExperimentResult:
    """Rejection rate under the tilted-trend alternative for each (T, alpha, b).

    Replicates are paired across b: replicate r re-derives its stream for
    every b, so the noise is identical and only the trend moves.
    """
    lrv = lrv or LrvConfig()
    cfg = DgpConfig(scenario="power", n=15, d=1)
    return _rate_experiment(
        "power",
        cfg,
        Ts,
        alphas,
        tuple(float(b) for b in bs),
        replicates,
        L,
        seed,
        lrv,
        workers,
        "sim_s6",
    )


def run_clustering_experiment(
    Ts,
    alphas,
    replicates: int = 500,
    L: int = 2000,
    seed: int = 0,
    lrv: LrvConfig | None = None,
    workers: int = 1,
) -> ExperimentResult:
    """Recovery of the three-group structure: P(N_hat = 3), P(exact partition),
    mean classification errors, and count histograms per (T, alpha)."""
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    lrv = lrv or LrvConfig()
    cfg = DgpConfig(scenario="clusters3")
    alphas = [float(a) for a in alphas]
    tag = _TAGS["clustering"]
    cells: dict[tuple, dict[str, float]] = {}
    histograms: dict[tuple, dict[str, dict[int, int]]] = {}
    for T in Ts:
        grid = build_grid(T, "sim_s6")
        run_cfg = replace(cfg, T=int(T))
        qs = _quantiles_by_alpha(cfg.n, int(T), grid, alphas, L, seed)
        args = [
            (run_cfg, grid, alphas, qs, lrv, tag, seed, lo, hi)
            for lo, hi in _chunks(replicates, workers)
        ]
        merged = {
            a: {"nhat3": 0, "exact": 0, "errors_total": 0, "nhat": {}, "errors": {}}
            for a in alphas
        }
        for batch in _run_batches(_cluster_batch, args, workers):
            for a in alphas:
                cell, add = merged[a], batch[a]
                cell["nhat3"] += add["nhat3"]
                cell["exact"] += add["exact"]
                cell["errors_total"] += add["errors_total"]
                for k, v in add["nhat"].items():
                    cell["nhat"][k] = cell["nhat"].get(k, 0) + v
                for k, v in add["errors"].items():
                    cell["errors"][k] = cell["errors"].get(k, 0) + v
        for a in alphas:
            cell = merged[a]
            p3 = cell["nhat3"] / replicates
            pex = cell["exact"] / replicates
            cells[(int(T), a)] = {
                "p_nhat_correct": float(p3),
                "p_partition_correct": float(pex),
                "mean_errors": cell["errors_total"] / replicates,
                "mc_se_nhat": _mc_se(p3, replicates),
                "mc_se_partition": _mc_se(pex, replicates),
                "critical_value": qs[a],
            }
            histograms[(int(T), a)] = {
                "nhat": dict(sorted(cell["nhat"].items())),
                "errors": dict(sorted(cell["errors"].items())),
            }
    return ExperimentResult(
        kind="clustering",
        config=_config_echo(
            cfg,
            grid_preset="sim_s6",
            L=L,
            seed=seed,
            lrv_method=lrv.method,
            Ts=[int(T) for T in Ts],
            alphas=alphas,
        ),
        replicates=replicates,
        cells=cells,
        histograms=histograms,
    )
