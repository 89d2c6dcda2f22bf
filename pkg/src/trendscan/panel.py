"""Panel data model and location-scale grid shared by the whole pipeline.

All types here are immutable after construction and safe to share across
threads or processes. Rescaled time is t/T with t = 1..T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, GridError, PanelValidationError

__all__ = [
    "Series",
    "PanelDataset",
    "LocationScalePoint",
    "LocationScaleGrid",
    "validate_panel",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Series:
    """One panel member: a response path y of length T and a T x d covariate block.

    ``x`` may be given as None, meaning d = 0; it is stored as a (T, 0) array
    so downstream code never branches on None.
    """

    id: str
    y: np.ndarray
    x: np.ndarray | None = None

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise PanelValidationError(
                f"series {self.id!r}: y must be one-dimensional, got shape {y.shape}"
            )
        x = self.x
        if x is None:
            x = np.empty((y.shape[0], 0), dtype=np.float64)
        else:
            x = np.asarray(x, dtype=np.float64)
            if x.ndim == 1:
                x = x[:, None]
            if x.ndim != 2:
                raise PanelValidationError(
                    f"series {self.id!r}: x must be T x d, got shape {x.shape}"
                )
            if x.shape[0] != y.shape[0]:
                raise PanelValidationError(
                    f"series {self.id!r}: y has length {y.shape[0]} "
                    f"but x has {x.shape[0]} rows"
                )
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "x", _readonly(x))

    @property
    def n_periods(self) -> int:
        return self.y.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """A validated panel of n series sharing length T and covariate dimension d."""

    series: tuple[Series, ...]
    T: int
    d: int

    @property
    def n(self) -> int:
        return len(self.series)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.series)

    def y_matrix(self) -> np.ndarray:
        """Stack the responses into an (n, T) array."""
        return np.stack([s.y for s in self.series])


def validate_panel(raw) -> PanelDataset:
    """Check the panel invariants and assemble a PanelDataset.

    Series order is preserved. Raises PanelValidationError naming the series
    id and position on the first violation found. Idempotent: passing an
    existing PanelDataset revalidates its series and returns an equal dataset.
    """
    if isinstance(raw, PanelDataset):
        raw = raw.series
    series = tuple(raw)
    if not series:
        raise PanelValidationError("panel is empty")
    if len(series) < 2:
        raise PanelValidationError(
            f"panel needs at least 2 series, got {len(series)} "
            f"(only {series[0].id!r})"
        )
    seen: dict[str, int] = {}
    T = series[0].n_periods
    d = series[0].n_covariates
    for pos, s in enumerate(series):
        if not isinstance(s, Series):
            raise PanelValidationError(f"entry {pos} is not a Series")
        if s.id in seen:
            raise PanelValidationError(
                f"duplicate series id {s.id!r} at positions {seen[s.id]} and {pos}"
            )
        seen[s.id] = pos
        if s.n_periods != T:
            raise PanelValidationError(
                f"series {s.id!r} (position {pos}) has length {s.n_periods}, "
                f"expected {T} from series {series[0].id!r}"
            )
        if s.n_covariates != d:
            raise PanelValidationError(
                f"series {s.id!r} (position {pos}) has {s.n_covariates} "
                f"covariates, expected {d} from series {series[0].id!r}"
            )
        if not np.isfinite(s.y).all():
            t_bad = int(np.flatnonzero(~np.isfinite(s.y))[0])
            raise PanelValidationError(
                f"series {s.id!r} (position {pos}): non-finite y at t={t_bad + 1}"
            )
        if s.x.size and not np.isfinite(s.x).all():
            t_bad = int(np.argwhere(~np.isfinite(s.x))[0][0])
            raise PanelValidationError(
                f"series {s.id!r} (position {pos}): non-finite covariate at t={t_bad + 1}"
            )
    if T < 2:
        raise PanelValidationError(f"series length T={T} is below the minimum of 2")
    return PanelDataset(series=series, T=T, d=d)


@dataclass(frozen=True, order=True)
class LocationScalePoint:
    """A location u in (0,1] and scale h in (0,1/2], encoding the interval [u-h, u+h].

    The interval must stay inside [0,1]. h = 1/2 forces u = 1/2 (the full
    interval) and is allowed mainly for diagnostics; generated grids stay at
    h <= 1/4.
    """

    u: float
    h: float

    def __post_init__(self) -> None:
        u = float(self.u)
        h = float(self.h)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "h", h)
        if not (0.0 < u <= 1.0) or not np.isfinite(u):
            raise DomainError(f"location u={u} outside (0, 1]")
        if not (0.0 < h <= 0.5) or not np.isfinite(h):
            raise DomainError(f"scale h={h} outside (0, 1/2]")
        if u - h < 0.0 or u + h > 1.0:
            raise GridError(
                f"interval [{u - h}, {u + h}] for (u={u}, h={h}) leaves [0, 1]"
            )

    @property
    def interval(self) -> tuple[float, float]:
        return (self.u - self.h, self.u + self.h)


@dataclass(frozen=True)
class LocationScaleGrid:
    """The finite evaluation set of location-scale points driving every statistic.

    ``n_dropped`` records how many candidate points a generator discarded for
    violating interval containment.
    """

    points: tuple[LocationScalePoint, ...]
    n_dropped: int = 0
    h_min: float = field(init=False)
    h_max: float = field(init=False)

    def __post_init__(self) -> None:
        points = tuple(self.points)
        if not points:
            raise GridError("grid has no points")
        if len(set(points)) != len(points):
            raise GridError("grid points are not pairwise distinct")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "h_min", min(p.h for p in points))
        object.__setattr__(self, "h_max", max(p.h for p in points))

    def __len__(self) -> int:
        return len(self.points)

    def u_array(self) -> np.ndarray:
        return np.array([p.u for p in self.points], dtype=np.float64)

    def h_array(self) -> np.ndarray:
        return np.array([p.h for p in self.points], dtype=np.float64)
