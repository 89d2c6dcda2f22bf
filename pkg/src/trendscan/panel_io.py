"""CSV panel ingestion, JSON report documents, and the persisted draw cache.

Input CSV is long format with header ``series_id,time,y[,x1..xd]``, UTF-8,
'.' decimal separator. Time labels are opaque sortable strings; all math uses
rescaled time t/T, and labels only reappear in report interval records.

Reports serialize to JSON with repr-exact floats, so parsing a document
rebuilds the original objects bit for bit and two runs with the same inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os

import numpy as np

from ._version import __version__
from .cluster import GroupStructure
from .exceptions import ConfigError, CsvFormatError, MissingDataError
from .multiscale import (
    CriticalValue,
    TestReport,
    grid_fingerprint,
    gaussian_draw_values,
    seed_draw_cache,
)
from .panel import LocationScalePoint, PanelDataset, Series, validate_panel
from .simulate import ExperimentResult

__all__ = [
    "load_panel_csv",
    "save_panel_csv",
    "report_to_dict",
    "report_from_dict",
    "experiment_to_dict",
    "experiment_from_dict",
    "group_structure_to_dict",
    "write_report",
    "read_report",
    "draws_cache_key",
    "load_draws_cache",
    "apply_draws_cache",
    "store_draws",
]

_MISSING_TOKENS = {"", "na", "nan", "null", "none"}

_FORMAT_NAME = "trendscan-report"
_FORMAT_VERSION = 1


def _is_missing(cell: str) -> bool:
    return cell.strip().lower() in _MISSING_TOKENS


def _parse_value(cell: str, lineno: int, column: str, series_id: str) -> float | None:
    if _is_missing(cell):
        return None
    try:
        return float(cell)
    except ValueError:
        raise CsvFormatError(
            f"line {lineno}: cannot parse {column} value {cell.strip()!r} "
            f"for series {series_id!r}"
        ) from None


def _fill_column(
    vals: list[float | None],
    series_id: str,
    column: str,
    extrapolate_boundary: bool,
) -> np.ndarray:
    """Linear interpolation of interior gaps on the observation index scale."""
    arr = np.array([math.nan if v is None else v for v in vals], dtype=np.float64)
    obs = np.flatnonzero(~np.isnan(arr))
    if obs.size == 0:
        raise MissingDataError(
            f"series {series_id!r}: column {column} has no observed values"
        )
    if obs.size == arr.size:
        return arr
    if (obs[0] > 0 or obs[-1] < arr.size - 1) and not extrapolate_boundary:
        raise MissingDataError(
            f"series {series_id!r}: column {column} has missing values at the "
            "boundary; extrapolation is off by default"
        )
    # np.interp is linear between observed neighbors and constant beyond them
    idx = np.arange(arr.size, dtype=np.float64)
    return np.interp(idx, idx[obs], arr[obs])


def load_panel_csv(
    path,
    interpolate: bool = False,
    missing_cap: int = 10,
    extrapolate_boundary: bool = False,
    return_time: bool = False,
):
    """Read a long-format panel CSV into a PanelDataset.

    Rows are sorted by time label within each series; every series must end
    up with the same label sequence. Missing y/x cells (empty, NA, NaN) are
    linearly interpolated when ``interpolate`` is set, provided the series
    has at most ``missing_cap`` missing cells and no boundary gaps (unless
    ``extrapolate_boundary`` turns on constant extension). With
    ``return_time`` the result is ``(panel, time_labels)``.
    """
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvFormatError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("line 1: file is empty") from None
        header = [c.strip() for c in header]
        if len(header) < 3 or header[0] != "series_id" or header[1] != "time" or header[2] != "y":
            raise CsvFormatError(
                "line 1: expected header series_id,time,y[,x1..xd], got "
                + ",".join(header)
            )
        x_names = header[3:]
        d = len(x_names)
        rows: dict[str, list[tuple]] = {}
        seen: dict[tuple[str, str], int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            sid = row[0].strip()
            label = row[1].strip()
            if not sid:
                raise CsvFormatError(f"line {lineno}: empty series_id")
            dup = seen.get((sid, label))
            if dup is not None:
                raise CsvFormatError(
                    f"line {lineno}: duplicate time {label!r} for series "
                    f"{sid!r} (first seen on line {dup})"
                )
            seen[(sid, label)] = lineno
            y = _parse_value(row[2], lineno, "y", sid)
            xs = [
                _parse_value(row[3 + k], lineno, x_names[k], sid) for k in range(d)
            ]
            rows.setdefault(sid, []).append((label, y, xs))
        if not rows:
            raise CsvFormatError("line 2: no data rows")

    labels_ref: tuple[str, ...] | None = None
    series = []
    for sid, entries in rows.items():
        entries.sort(key=lambda e: e[0])
        labels = tuple(e[0] for e in entries)
        if labels_ref is None:
            labels_ref = labels
        elif labels != labels_ref:
            raise CsvFormatError(
                f"series {sid!r} covers different time labels than series "
                f"{next(iter(rows))!r}"
            )
        y_vals = [e[1] for e in entries]
        x_vals = [e[2] for e in entries]
        n_missing = sum(v is None for v in y_vals) + sum(
            v is None for xs in x_vals for v in xs
        )
        if n_missing > missing_cap:
            raise MissingDataError(
                f"series {sid!r} has {n_missing} missing values, exceeding "
                f"the cap of {missing_cap}"
            )
        if n_missing and not interpolate:
            raise MissingDataError(
                f"series {sid!r} has {n_missing} missing values; enable "
                "interpolation to fill interior gaps"
            )
        y = _fill_column(y_vals, sid, "y", extrapolate_boundary)
        x = None
        if d:
            cols = [
                _fill_column([xs[k] for xs in x_vals], sid, x_names[k], extrapolate_boundary)
                for k in range(d)
            ]
            x = np.column_stack(cols)
        series.append(Series(id=sid, y=y, x=x))
    panel = validate_panel(series)
    if return_time:
        return panel, labels_ref
    return panel


def save_panel_csv(panel: PanelDataset, path, time_labels=None, digits: int = 17) -> None:
    """Write a PanelDataset in the long CSV format read by load_panel_csv.

    The default 17 significant digits make the float round trip exact.
    """
    if not (1 <= digits <= 17):
        raise ConfigError(f"digits={digits} outside 1..17")
    if time_labels is None:
        time_labels = [f"{t:04d}" for t in range(1, panel.T + 1)]
    if len(time_labels) != panel.T:
        raise ConfigError(
            f"got {len(time_labels)} time labels for T={panel.T} observations"
        )
    fmt = f"%.{digits}g"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["series_id", "time", "y"] + [f"x{k + 1}" for k in range(panel.d)]
        )
        for s in panel.series:
            for t in range(panel.T):
                row = [s.id, time_labels[t], fmt % s.y[t]]
                row.extend(fmt % s.x[t, k] for k in range(panel.d))
                writer.writerow(row)


def _interval_record(
    point: LocationScalePoint, T: int, time_labels
) -> dict:
    rec = {
        "u": point.u,
        "h": point.h,
        "start": point.u - point.h,
        "end": point.u + point.h,
    }
    if time_labels is not None:
        # first/last observation index covered by [u-h, u+h] on the t/T scale,
        # same windowing convention as the kernel weights
        lo = max(1, int(math.ceil((point.u - point.h) * T - 1e-9)))
        hi = min(T, int(math.floor((point.u + point.h) * T + 1e-9)))
        rec["time_start"] = time_labels[lo - 1]
        rec["time_end"] = time_labels[hi - 1]
    return rec


def report_to_dict(report: TestReport, time_labels=None) -> dict:
    """JSON-ready structure for a TestReport; exact float round trip."""
    T = int(report.diagnostics["T"])
    pairs = []
    for (i, j), points in report.rejections.items():
        pairs.append(
            {
                "i": i,
                "j": j,
                "rejected": [_interval_record(p, T, time_labels) for p in points],
                "minimal": [
                    _interval_record(p, T, time_labels)
                    for p in report.minimal[(i, j)]
                ],
            }
        )
    cv = report.critical_value
    return {
        "alpha": report.alpha,
        "critical_value": {"alpha": cv.alpha, "q": cv.q, "L": cv.L, "seed": cv.seed},
        "global_reject": report.global_reject,
        "series_ids": list(report.series_ids),
        "pairs": pairs,
        "diagnostics": report.diagnostics,
    }


def _points_from_records(records) -> tuple[LocationScalePoint, ...]:
    return tuple(LocationScalePoint(u=r["u"], h=r["h"]) for r in records)


def report_from_dict(data: dict) -> TestReport:
    """Rebuild a TestReport from report_to_dict output."""
    cv = data["critical_value"]
    rejections = {}
    minimal = {}
    for rec in data["pairs"]:
        key = (rec["i"], rec["j"])
        rejections[key] = _points_from_records(rec["rejected"])
        minimal[key] = _points_from_records(rec["minimal"])
    return TestReport(
        alpha=data["alpha"],
        critical_value=CriticalValue(
            alpha=cv["alpha"], q=cv["q"], L=cv["L"], seed=cv["seed"]
        ),
        global_reject=data["global_reject"],
        series_ids=tuple(data["series_ids"]),
        rejections=rejections,
        minimal=minimal,
        diagnostics=data["diagnostics"],
    )


def group_structure_to_dict(structure: GroupStructure, series_ids) -> dict:
    """JSON-ready clustering section; group members are reported as ids."""
    within = [
        v if math.isfinite(v) else None for v in structure.within_max
    ]
    between = []
    for (l, l2), points in structure.between_intervals.items():
        between.append(
            {
                "groups": [l, l2],
                "intervals": [
                    {"u": p.u, "h": p.h, "start": p.u - p.h, "end": p.u + p.h}
                    for p in points
                ],
            }
        )
    return {
        "n_groups": structure.n_groups,
        "groups": [[series_ids[i] for i in g] for g in structure.groups],
        "within_max": within,
        "between_intervals": between,
    }


def _cell_key_fields(key: tuple) -> dict:
    fields = {"T": key[0], "alpha": key[1]}
    if len(key) > 2:
        fields["b"] = key[2]
    return fields


def experiment_to_dict(result: ExperimentResult) -> dict:
    cells = []
    for key in sorted(result.cells):
        rec = _cell_key_fields(key)
        rec["metrics"] = result.cells[key]
        cells.append(rec)
    doc = {
        "kind": result.kind,
        "config": result.config,
        "replicates": result.replicates,
        "cells": cells,
    }
    if result.histograms is not None:
        hists = []
        for key in sorted(result.histograms):
            rec = _cell_key_fields(key)
            rec["counts"] = {
                name: {str(k): v for k, v in sorted(table.items())}
                for name, table in result.histograms[key].items()
            }
            hists.append(rec)
        doc["histograms"] = hists
    return doc


def experiment_from_dict(data: dict) -> ExperimentResult:
    cells = {}
    for rec in data["cells"]:
        key = (rec["T"], rec["alpha"]) + ((rec["b"],) if "b" in rec else ())
        cells[key] = rec["metrics"]
    histograms = None
    if "histograms" in data:
        histograms = {}
        for rec in data["histograms"]:
            key = (rec["T"], rec["alpha"]) + ((rec["b"],) if "b" in rec else ())
            histograms[key] = {
                name: {int(k): v for k, v in table.items()}
                for name, table in rec["counts"].items()
            }
    return ExperimentResult(
        kind=data["kind"],
        config=data["config"],
        replicates=data["replicates"],
        cells=cells,
        histograms=histograms,
    )


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()[:16]


def _document(kind: str, body: dict, config: dict, seed) -> dict:
    return {
        "format": _FORMAT_NAME,
        "format_version": _FORMAT_VERSION,
        "artifact_version": __version__,
        "kind": kind,
        "seed": seed,
        "config_hash": _config_hash(config),
        "body": body,
    }


def _test_config_echo(report: TestReport) -> dict:
    diag = report.diagnostics
    return {
        "alpha": report.alpha,
        "L": report.critical_value.L,
        "seed": report.critical_value.seed,
        "lrv_method": diag.get("lrv_method"),
        "n": diag.get("n"),
        "T": diag.get("T"),
        "d": diag.get("d"),
        "grid_size": diag.get("grid_size"),
    }


def write_report(obj, path, time_labels=None, clustering: dict | None = None) -> None:
    """Serialize a TestReport or ExperimentResult to a JSON document.

    The document carries the artifact version, a configuration hash, and the
    seed, so a reported run can be reproduced exactly. Identical inputs give
    byte-identical files. ``clustering`` (from group_structure_to_dict)
    attaches a clustering section to a test report.
    """
    if isinstance(obj, TestReport):
        body = report_to_dict(obj, time_labels)
        kind = "test"
        if clustering is not None:
            body["clustering"] = clustering
            kind = "cluster"
        doc = _document(kind, body, _test_config_echo(obj), obj.critical_value.seed)
    elif isinstance(obj, ExperimentResult):
        if clustering is not None:
            raise ConfigError("clustering section only applies to test reports")
        body = experiment_to_dict(obj)
        doc = _document("experiment", body, body["config"], body["config"].get("seed"))
    else:
        raise ConfigError(f"cannot serialize object of type {type(obj).__name__}")
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, sort_keys=True, indent=2, allow_nan=False)
            handle.write("\n")
    except OSError as exc:
        raise ConfigError(f"cannot write report to {path}: {exc}") from exc


def read_report(path):
    """Parse a report document back into its TestReport or ExperimentResult.

    Cluster-kind documents return (TestReport, clustering_section).
    """
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read report from {path}: {exc}") from exc
    if doc.get("format") != _FORMAT_NAME:
        raise ConfigError(f"{path} is not a {_FORMAT_NAME} document")
    body = doc["body"]
    kind = doc.get("kind")
    if kind == "test":
        return report_from_dict(body)
    if kind == "cluster":
        return report_from_dict(body), body.get("clustering")
    if kind == "experiment":
        return experiment_from_dict(body)
    raise ConfigError(f"unknown report kind {kind!r} in {path}")


def draws_cache_key(n: int, T: int, grid, L: int, seed: int) -> str:
    return f"{n}|{T}|{grid_fingerprint(grid)}|{L}|{seed}"


def load_draws_cache(path) -> dict:
    if not os.path.exists(path):
        return {}
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read draws cache {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"draws cache {path} is not a JSON object")
    return data


def apply_draws_cache(path, n: int, T: int, grid, L: int, seed: int) -> bool:
    """Inject persisted draws for one key into the in-process cache."""
    values = load_draws_cache(path).get(draws_cache_key(n, T, grid, L, seed))
    if values is None:
        return False
    seed_draw_cache(n, T, grid, L, seed, np.asarray(values, dtype=np.float64))
    return True


def store_draws(path, n: int, T: int, grid, L: int, seed: int) -> None:
    """Compute (or reuse) the Gaussian draws for one key and persist them."""
    cache = load_draws_cache(path)
    key = draws_cache_key(n, T, grid, L, seed)
    values = gaussian_draw_values(n, T, grid, L, seed)
    cache[key] = [float(v) for v in values]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(cache, handle, sort_keys=True)
        handle.write("\n")
