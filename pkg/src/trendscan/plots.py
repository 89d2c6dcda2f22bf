"""Deterministic SVG renderings: per-pair interval plots and dendrograms.

Documents are plain hand-assembled SVG with fixed coordinate formatting, so
identical inputs give byte-identical files (a golden-file contract).
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .cluster import ClusterTree, partition_at
from .estimate import LrvConfig, augment_panel, local_linear_fit
from .exceptions import ConfigError
from .multiscale import TestReport
from .panel import PanelDataset, validate_panel

__all__ = ["render_interval_plot", "render_dendrogram"]

_SERIES_COLORS = ("#1f77b4", "#d62728")
_GROUP_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Svg:
    """Minimal element buffer with a fixed header and float format."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        ]

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0):
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{stroke}" stroke-width="{_fmt(width)}"/>'
        )

    def rect(self, x, y, w, h, fill="none", stroke="none", width=1.0):
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def polyline(self, xy, stroke, width=1.2):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in xy)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def text(self, x, y, content, size=11, anchor="start", fill="#000000"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" {_FONT} font-size="{size}" '
            f'text-anchor="{anchor}" fill="{fill}">{escape(str(content))}</text>'
        )

    def document(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Frame:
    """Maps data coordinates into one panel's pixel box and draws its axes."""

    def __init__(self, svg, left, top, width, height, x_range, y_range, title):
        self.svg = svg
        self.left, self.top = left, top
        self.width, self.height = width, height
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        svg.rect(left, top, width, height, fill="none", stroke="#000000", width=1.0)
        svg.text(left, top - 6, title, size=12)

    def x(self, v) -> float:
        return self.left + (v - self.x0) / (self.x1 - self.x0) * self.width

    def y(self, v) -> float:
        return self.top + self.height - (v - self.y0) / (self.y1 - self.y0) * self.height

    def x_ticks(self, values):
        for v in values:
            px = self.x(v)
            self.svg.line(px, self.top + self.height, px, self.top + self.height + 4)
            self.svg.text(
                px, self.top + self.height + 16, _fmt(v), size=10, anchor="middle"
            )

    def y_ticks(self, values):
        for v in values:
            py = self.y(v)
            self.svg.line(self.left - 4, py, self.left, py)
            self.svg.text(self.left - 7, py + 3.5, _fmt(v), size=10, anchor="end")


def _nice_y_range(lo: float, hi: float) -> tuple[float, float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return (-1.0, 1.0)
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _resolve_pair(report: TestReport, pair) -> tuple[str, str]:
    a, b = pair
    ids = report.series_ids
    if isinstance(a, int):
        a = ids[a]
    if isinstance(b, int):
        b = ids[b]
    if a not in ids or b not in ids:
        raise ConfigError(f"pair {pair!r} not present in the report")
    key = (a, b) if ids.index(a) < ids.index(b) else (b, a)
    if key not in report.rejections:
        raise ConfigError(f"pair {pair!r} not present in the report")
    return key


def render_interval_plot(
    report: TestReport,
    pair,
    panel: PanelDataset | None = None,
    pilot_bandwidth: float = 0.1,
) -> str:
    """Three stacked panels for one series pair.

    (a) the two augmented series, (b) their local-linear fits, (c) the
    rejected intervals as grey bars with the minimal subset in black. The
    data panels need ``panel``; without it they carry a note instead.
    """
    key = _resolve_pair(report, pair)
    id_a, id_b = key
    width, panel_h, gap, left, right_pad, top0 = 720, 150, 44, 64, 20, 30
    height = top0 + 3 * panel_h + 2 * gap + 40
    svg = _Svg(width, height)
    frame_w = width - left - right_pad

    aug = None
    if panel is not None:
        panel = validate_panel(panel)
        lrv = LrvConfig(method=report.diagnostics.get("lrv_method", "subseries"))
        aug = augment_panel(panel, lrv)
        idx = {sid: k for k, sid in enumerate(aug.ids)}
        ya = aug.y_aug[idx[id_a]]
        yb = aug.y_aug[idx[id_b]]
        T = aug.T
        ts = [(t + 1) / T for t in range(T)]

    titles = (
        f"(a) augmented series {id_a} and {id_b}",
        f"(b) local linear fits (bandwidth {pilot_bandwidth:g})",
        f"(c) rejected intervals, minimal set in black (alpha={report.alpha:g})",
    )

    # panel (a): raw augmented paths
    top = top0
    if aug is not None:
        lo = min(float(ya.min()), float(yb.min()))
        hi = max(float(ya.max()), float(yb.max()))
        fa = _Frame(svg, left, top, frame_w, panel_h, (0.0, 1.0), _nice_y_range(lo, hi), titles[0])
        fa.x_ticks((0.0, 0.25, 0.5, 0.75, 1.0))
        fa.y_ticks((lo, hi))
        for vals, color, sid in ((ya, _SERIES_COLORS[0], id_a), (yb, _SERIES_COLORS[1], id_b)):
            fa.svg.polyline([(fa.x(t), fa.y(v)) for t, v in zip(ts, vals)], color, 1.0)
        svg.text(left + 8, top + 14, id_a, size=10, fill=_SERIES_COLORS[0])
        svg.text(left + 48, top + 14, id_b, size=10, fill=_SERIES_COLORS[1])
    else:
        fa = _Frame(svg, left, top, frame_w, panel_h, (0.0, 1.0), (-1.0, 1.0), titles[0])
        svg.text(left + frame_w / 2, top + panel_h / 2, "panel data not provided", anchor="middle")

    # panel (b): smoothed trends
    top = top0 + panel_h + gap
    if aug is not None:
        fit_a = local_linear_fit(ya, pilot_bandwidth)
        fit_b = local_linear_fit(yb, pilot_bandwidth)
        lo = min(float(fit_a.min()), float(fit_b.min()))
        hi = max(float(fit_a.max()), float(fit_b.max()))
        fb = _Frame(svg, left, top, frame_w, panel_h, (0.0, 1.0), _nice_y_range(lo, hi), titles[1])
        fb.x_ticks((0.0, 0.25, 0.5, 0.75, 1.0))
        fb.y_ticks((lo, hi))
        fb.svg.polyline([(fb.x(t), fb.y(v)) for t, v in zip(ts, fit_a)], _SERIES_COLORS[0], 1.6)
        fb.svg.polyline([(fb.x(t), fb.y(v)) for t, v in zip(ts, fit_b)], _SERIES_COLORS[1], 1.6)
    else:
        fb = _Frame(svg, left, top, frame_w, panel_h, (0.0, 1.0), (-1.0, 1.0), titles[1])
        svg.text(left + frame_w / 2, top + panel_h / 2, "panel data not provided", anchor="middle")

    # panel (c): interval bars, one row per rejected point in grid order
    top = top0 + 2 * (panel_h + gap)
    rejected = report.rejections[key]
    minimal = set(report.minimal[key])
    rows = max(len(rejected), 1)
    fc = _Frame(svg, left, top, frame_w, panel_h, (0.0, 1.0), (0.0, float(rows)), titles[2])
    fc.x_ticks((0.0, 0.25, 0.5, 0.75, 1.0))
    bar_h = panel_h / rows
    for r, point in enumerate(rejected):
        x_lo = fc.x(point.u - point.h)
        x_hi = fc.x(point.u + point.h)
        y_top = top + r * bar_h + 0.15 * bar_h
        svg.rect(x_lo, y_top, x_hi - x_lo, 0.7 * bar_h, fill="#bbbbbb")
        if point in minimal:
            svg.rect(x_lo, y_top + 0.2 * bar_h, x_hi - x_lo, 0.3 * bar_h, fill="#000000")
    if not rejected:
        svg.text(left + frame_w / 2, top + panel_h / 2, "no rejected intervals", anchor="middle")
    return svg.document()


def _leaf_order(tree: ClusterTree) -> list[int]:
    children = {m.new_id: (m.left, m.right) for m in tree.merges}
    roots = [m.new_id for m in tree.merges if m.new_id not in
             {c for pair in children.values() for c in pair}]
    if not roots:
        roots = list(range(tree.n_leaves))
    order: list[int] = []
    stack = list(reversed(roots))
    while stack:
        node = stack.pop()
        if node < tree.n_leaves:
            order.append(node)
        else:
            lo, hi = children[node]
            stack.append(hi)
            stack.append(lo)
    return order


def render_dendrogram(tree: ClusterTree, n_groups: int, labels=None) -> str:
    """Dendrogram with merge heights on the y-axis and one outlined rectangle
    per cluster of the n_groups-partition."""
    n = tree.n_leaves
    if labels is None:
        labels = [str(i + 1) for i in range(n)]
    if len(labels) != n:
        raise ConfigError(f"got {len(labels)} labels for {n} leaves")
    if not (1 <= n_groups <= n):
        raise ConfigError(f"n_groups={n_groups} outside 1..{n}")

    width, height, left, right_pad, top, bottom = 720, 420, 64, 20, 40, 60
    svg = _Svg(width, height)
    plot_w = width - left - right_pad
    plot_h = height - top - bottom

    heights = [m.height for m in tree.merges]
    h_max = max(heights) if heights else 1.0
    h_min = min(0.0, min(heights)) if heights else 0.0
    pad = 0.08 * (h_max - h_min or 1.0)
    y0, y1 = h_min - pad, h_max + pad

    def ypix(v: float) -> float:
        return top + plot_h - (v - y0) / (y1 - y0) * plot_h

    order = _leaf_order(tree)
    slot = {leaf: k for k, leaf in enumerate(order)}
    dx = plot_w / n
    xpos = {leaf: left + (slot[leaf] + 0.5) * dx for leaf in order}
    node_y = {leaf: y0 for leaf in order}

    # axis
    svg.line(left, top, left, top + plot_h)
    for frac in (0.0, 0.5, 1.0):
        v = h_min + frac * (h_max - h_min or 1.0)
        svg.line(left - 4, ypix(v), left, ypix(v))
        svg.text(left - 7, ypix(v) + 3.5, _fmt(v), size=10, anchor="end")

    # cluster rectangles under the cut for the requested partition
    k = n - n_groups
    if k == 0:
        cut = y0 + 0.5 * (heights[0] - y0) if heights else 0.5 * (y0 + y1)
    elif k == len(tree.merges):
        cut = h_max + 0.5 * pad
    else:
        cut = 0.5 * (heights[k - 1] + heights[k])
    for g, cluster in enumerate(partition_at(tree, n_groups)):
        xs = [xpos[i] for i in cluster]
        x_lo, x_hi = min(xs) - 0.4 * dx, max(xs) + 0.4 * dx
        color = _GROUP_COLORS[g % len(_GROUP_COLORS)]
        svg.rect(x_lo, ypix(cut), x_hi - x_lo, top + plot_h - ypix(cut),
                 fill="none", stroke=color, width=1.5)

    # merge brackets, in merge order
    for merge in tree.merges:
        xl, xr = xpos[merge.left], xpos[merge.right]
        yl, yr = node_y[merge.left], node_y[merge.right]
        y = merge.height
        svg.line(xl, ypix(yl), xl, ypix(y))
        svg.line(xr, ypix(yr), xr, ypix(y))
        svg.line(xl, ypix(y), xr, ypix(y))
        xpos[merge.new_id] = 0.5 * (xl + xr)
        node_y[merge.new_id] = y

    # leaf labels
    for leaf in order:
        svg.text(xpos[leaf], top + plot_h + 14, str(labels[leaf]), size=10, anchor="middle")
    svg.text(left - 40, top - 14, "height", size=11)
    return svg.document()
