"""Command line interface: test, cluster, and simulate subcommands.

Every run is deterministic in (input file, flags): reports and plots are
byte-identical across repeats and worker counts.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .cluster import build_group_structure, hac_tree
from .estimate import LrvConfig, augment_panel
from .exceptions import ConfigError, TrendscanError
from .multiscale import GRID_PRESETS, build_grid, pair_statistics, run_test
from .panel_io import (
    apply_draws_cache,
    group_structure_to_dict,
    load_panel_csv,
    store_draws,
    write_report,
)
from .plots import render_dendrogram, render_interval_plot
from .simulate import (
    run_clustering_experiment,
    run_power_experiment,
    run_size_experiment,
)
from ._version import __version__

__all__ = ["main"]


def _parse_lrv(text: str) -> LrvConfig:
    if text == "subseries":
        return LrvConfig(method="subseries")
    if text.startswith("subseries:"):
        return LrvConfig(method="subseries", s_T=int(text.split(":", 1)[1]))
    if text.startswith("ar:"):
        return LrvConfig(method="ar_plugin", ar_order=int(text.split(":", 1)[1]))
    if text == "ar":
        return LrvConfig(method="ar_plugin")
    raise ConfigError(
        f"unknown --lrv value {text!r}; use subseries[:s] or ar:<order>"
    )


def _load_grid(T: int, spec: str):
    if spec in GRID_PRESETS:
        return build_grid(T, spec)
    if spec.startswith("custom:"):
        path = spec.split(":", 1)[1]
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read custom grid {path}: {exc}") from exc
        if not isinstance(data, dict) or "u" not in data or "h" not in data:
            raise ConfigError(
                f"custom grid {path} must be a JSON object with 'u' and 'h' lists"
            )
        return build_grid(T, "custom", custom_spec=(data["u"], data["h"]))
    raise ConfigError(
        f"unknown --grid value {spec!r}; choices: {', '.join(GRID_PRESETS)} "
        "or custom:<file>"
    )


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def _alpha_tag(alpha: float) -> str:
    return _safe_name(f"{alpha:g}")


def _add_io_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", help="long-format CSV: series_id,time,y[,x1..xd]")
    parser.add_argument(
        "--interpolate",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="fill interior missing y/x cells by linear interpolation",
    )
    parser.add_argument(
        "--missing-cap",
        type=int,
        default=10,
        metavar="K",
        help="reject series with more than K missing cells (default 10)",
    )
    parser.add_argument(
        "--extrapolate-boundary",
        action="store_true",
        help="allow constant extension for boundary gaps during interpolation",
    )


def _add_test_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--alpha",
        type=float,
        action="append",
        metavar="A",
        help="significance level; repeatable (default 0.05)",
    )
    parser.add_argument(
        "--grid",
        default="sim_s6",
        metavar="SPEC",
        help="grid preset sim_s6|gdp_s71|house_s72 or custom:<json file>",
    )
    parser.add_argument(
        "--lrv",
        default="subseries",
        metavar="METHOD",
        help="long-run variance estimator: subseries[:s] or ar:<order>",
    )
    parser.add_argument(
        "--mc-draws", type=int, default=2000, metavar="L",
        help="Monte-Carlo draws for the critical value (default 2000)",
    )
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument(
        "--out", default=".", metavar="DIR", help="output directory (default .)"
    )
    parser.add_argument(
        "--plots",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="write SVG plots next to the report",
    )
    parser.add_argument(
        "--cache",
        metavar="FILE",
        help="JSON cache of Gaussian draws keyed by (n,T,grid,L,seed)",
    )


def _prepare_panel_grid(args):
    panel, time_labels = load_panel_csv(
        args.input,
        interpolate=args.interpolate,
        missing_cap=args.missing_cap,
        extrapolate_boundary=args.extrapolate_boundary,
        return_time=True,
    )
    grid = _load_grid(panel.T, args.grid)
    if args.cache:
        apply_draws_cache(args.cache, panel.n, panel.T, grid, args.mc_draws, args.seed)
    return panel, time_labels, grid


def _finish_cache(args, panel, grid) -> None:
    if args.cache:
        store_draws(args.cache, panel.n, panel.T, grid, args.mc_draws, args.seed)


def _cmd_test(args) -> int:
    panel, time_labels, grid = _prepare_panel_grid(args)
    lrv = _parse_lrv(args.lrv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    alphas = args.alpha or [0.05]
    for alpha in alphas:
        report = run_test(panel, grid, alpha=alpha, lrv=lrv, L=args.mc_draws, seed=args.seed)
        tag = _alpha_tag(alpha)
        path = out / f"test_report_alpha{tag}.json"
        write_report(report, path, time_labels=time_labels)
        n_rej = sum(1 for pts in report.rejections.values() if pts)
        print(
            f"test alpha={alpha:g}: global_reject={report.global_reject} "
            f"q={report.critical_value.q:.6g} pairs_with_rejections={n_rej} "
            f"-> {path}"
        )
        if args.plots:
            for (i, j), pts in report.rejections.items():
                if not pts:
                    continue
                svg = render_interval_plot(report, (i, j), panel)
                svg_path = out / (
                    f"pair_{_safe_name(i)}_{_safe_name(j)}_alpha{tag}.svg"
                )
                svg_path.write_text(svg, encoding="utf-8")
                print(f"  plot {i} vs {j} -> {svg_path}")
    _finish_cache(args, panel, grid)
    return 0


def _cmd_cluster(args) -> int:
    panel, time_labels, grid = _prepare_panel_grid(args)
    lrv = _parse_lrv(args.lrv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    alphas = args.alpha or [0.05]
    if len(alphas) > 1:
        raise ConfigError("cluster takes a single --alpha")
    alpha = alphas[0]
    report = run_test(panel, grid, alpha=alpha, lrv=lrv, L=args.mc_draws, seed=args.seed)
    aug = augment_panel(panel, lrv)
    stats = pair_statistics(aug, grid)
    tree = hac_tree(stats.psi_max, panel.n)
    structure = build_group_structure(tree, stats.psi_max, report, n_groups=args.n_groups)
    tag = _alpha_tag(alpha)
    path = out / f"cluster_report_alpha{tag}.json"
    write_report(
        report,
        path,
        time_labels=time_labels,
        clustering=group_structure_to_dict(structure, report.series_ids),
    )
    groups_text = "; ".join(
        ",".join(report.series_ids[i] for i in g) for g in structure.groups
    )
    print(
        f"cluster alpha={alpha:g}: n_groups={structure.n_groups} "
        f"[{groups_text}] -> {path}"
    )
    if args.plots:
        svg = render_dendrogram(tree, structure.n_groups, labels=list(report.series_ids))
        svg_path = out / f"dendrogram_alpha{tag}.svg"
        svg_path.write_text(svg, encoding="utf-8")
        print(f"  dendrogram -> {svg_path}")
    _finish_cache(args, panel, grid)
    return 0


def _cmd_simulate(args) -> int:
    alphas = args.alpha or [0.01, 0.05, 0.1]
    Ts = args.T or [100, 250, 500]
    lrv = _parse_lrv(args.lrv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.experiment == "size":
        replicates = args.replicates or 1000
        result = run_size_experiment(
            Ts, alphas, replicates=replicates, L=args.mc_draws,
            seed=args.seed, lrv=lrv, workers=args.workers,
        )
    elif args.experiment == "power":
        replicates = args.replicates or 1000
        bs = args.b or [0.75, 1.0, 1.25]
        result = run_power_experiment(
            Ts, alphas, bs, replicates=replicates, L=args.mc_draws,
            seed=args.seed, lrv=lrv, workers=args.workers,
        )
    else:
        replicates = args.replicates or 500
        result = run_clustering_experiment(
            Ts, alphas, replicates=replicates, L=args.mc_draws,
            seed=args.seed, lrv=lrv, workers=args.workers,
        )
    path = out / f"experiment_{args.experiment}.json"
    write_report(result, path)
    for key in sorted(result.cells):
        metrics = result.cells[key]
        label = " ".join(
            f"{name}={value:.6g}" if isinstance(value, float) else f"{name}={value}"
            for name, value in metrics.items()
        )
        head = f"T={key[0]} alpha={key[1]:g}"
        if len(key) > 2:
            head += f" b={key[2]:g}"
        print(f"{args.experiment} {head}: {label}")
    print(f"report -> {path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendscan",
        description=(
            "Multiscale comparison of nonparametric time trends across a "
            "panel of time series, with familywise error control and "
            "clustering into same-trend groups."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser(
        "test", help="run the pairwise multiscale test on a CSV panel"
    )
    _add_io_flags(p_test)
    _add_test_flags(p_test)
    p_test.set_defaults(func=_cmd_test)

    p_cluster = sub.add_parser(
        "cluster", help="estimate same-trend groups from the test statistics"
    )
    _add_io_flags(p_cluster)
    _add_test_flags(p_cluster)
    p_cluster.add_argument(
        "--n-groups",
        type=int,
        default=None,
        metavar="N",
        help="fix the number of groups instead of estimating it",
    )
    p_cluster.set_defaults(func=_cmd_cluster)

    p_sim = sub.add_parser(
        "simulate", help="run the size / power / clustering experiments"
    )
    p_sim.add_argument(
        "--experiment",
        choices=("size", "power", "clustering"),
        required=True,
        help="which experiment to run",
    )
    p_sim.add_argument(
        "--T", type=int, action="append", metavar="T",
        help="series length; repeatable (default 100 250 500)",
    )
    p_sim.add_argument(
        "--alpha", type=float, action="append", metavar="A",
        help="significance level; repeatable (default 0.01 0.05 0.1)",
    )
    p_sim.add_argument(
        "--b", type=float, action="append", metavar="B",
        help="power experiment slope; repeatable (default 0.75 1.0 1.25)",
    )
    p_sim.add_argument(
        "--replicates", type=int, default=None, metavar="R",
        help="Monte-Carlo replicates (default 1000; clustering 500)",
    )
    p_sim.add_argument(
        "--lrv", default="subseries", metavar="METHOD",
        help="long-run variance estimator: subseries[:s] or ar:<order>",
    )
    p_sim.add_argument(
        "--mc-draws", type=int, default=2000, metavar="L",
        help="Monte-Carlo draws for critical values (default 2000)",
    )
    p_sim.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p_sim.add_argument(
        "--workers", type=int, default=1, metavar="W",
        help="parallel worker processes; results do not depend on W",
    )
    p_sim.add_argument(
        "--out", default=".", metavar="DIR", help="output directory (default .)"
    )
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrendscanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
