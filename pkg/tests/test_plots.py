"""Tests for the SVG interval plots and dendrograms, including golden files."""

import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from trendscan import (
    ConfigError,
    CriticalValue,
    LocationScalePoint,
    Series,
    TestReport,
    build_grid,
    hac_tree,
    render_dendrogram,
    render_interval_plot,
    run_test,
    validate_panel,
)

GOLDEN = Path(__file__).parent / "golden"


def fixed_panel(n=3, T=40, seed=1, ids=None):
    rng = np.random.default_rng(seed)
    u = np.arange(1, T + 1) / T
    ids = ids or [f"s{i}" for i in range(n)]
    series = [
        Series(id=ids[i], y=rng.normal(0.0, 0.05, T) + (5.0 * (u - 0.5) if i == 0 else 0.0))
        for i in range(n)
    ]
    return validate_panel(series)


def fake_report(ids, rejections, minimal, alpha=0.1, T=10):
    return TestReport(
        alpha=alpha,
        critical_value=CriticalValue(alpha=alpha, q=1.0, L=100, seed=0),
        global_reject=any(rejections.values()),
        series_ids=tuple(ids),
        rejections=rejections,
        minimal=minimal,
        diagnostics={"T": T},
    )


def golden_interval_svg() -> str:
    panel = fixed_panel()
    grid = build_grid(panel.T, "sim_s6")
    report = run_test(panel, grid, alpha=0.05, L=150, seed=4)
    return render_interval_plot(report, ("s0", "s1"), panel)


def golden_dendrogram_svg() -> str:
    # condensed pair order (0,1),(0,2),(1,2): merges at heights 1 then 5
    tree = hac_tree(np.array([1.0, 5.0, 4.0]), 3)
    return render_dendrogram(tree, 2, labels=["a", "b", "c"])


# ------------------------------------------------------------- interval plot


def test_interval_plot_deterministic_and_well_formed():
    a = golden_interval_svg()
    b = golden_interval_svg()
    assert a == b
    ET.fromstring(a)  # parses as XML
    assert a.startswith("<svg ")
    assert a.endswith("</svg>\n")


def test_interval_plot_bar_geometry():
    # one rejected interval [0.2, 0.4]: grey bar from 20% to 40% of the x-axis
    pt = LocationScalePoint(u=0.3, h=0.1)
    report = fake_report(
        ["a", "b"], {("a", "b"): (pt,)}, {("a", "b"): (pt,)}
    )
    svg = render_interval_plot(report, ("a", "b"))
    # frame x-span is 64..700, so 0.2 -> 191.20 and width 0.2*636 = 127.20
    assert '<rect x="191.20"' in svg
    grey = [p for p in svg.split("\n") if 'fill="#bbbbbb"' in p]
    black = [p for p in svg.split("\n") if 'fill="#000000"' in p and "<rect" in p]
    assert len(grey) == 1 and len(black) == 1
    assert 'width="127.20"' in grey[0] and 'width="127.20"' in black[0]


def test_interval_plot_minimal_subset_highlighted():
    pts = (
        LocationScalePoint(u=0.3, h=0.1),
        LocationScalePoint(u=0.3, h=0.2),
        LocationScalePoint(u=0.7, h=0.1),
    )
    report = fake_report(
        ["a", "b"], {("a", "b"): pts}, {("a", "b"): pts[:1] + pts[2:]}
    )
    svg = render_interval_plot(report, ("a", "b"))
    grey = [p for p in svg.split("\n") if 'fill="#bbbbbb"' in p]
    black = [p for p in svg.split("\n") if 'fill="#000000"' in p and "<rect" in p]
    assert len(grey) == 3 and len(black) == 2


def test_interval_plot_empty_rejections():
    report = fake_report(["a", "b"], {("a", "b"): ()}, {("a", "b"): ()})
    svg = render_interval_plot(report, ("a", "b"))
    assert "no rejected intervals" in svg
    # all three panel frames still drawn
    frames = [p for p in svg.split("\n") if 'stroke="#000000"' in p and "<rect" in p]
    assert len(frames) == 3
    ET.fromstring(svg)


def test_interval_plot_without_panel_notes():
    report = fake_report(["a", "b"], {("a", "b"): ()}, {("a", "b"): ()})
    svg = render_interval_plot(report, ("a", "b"))
    assert svg.count("panel data not provided") == 2


def test_interval_plot_accepts_indices_and_reversed_pairs():
    panel = fixed_panel()
    grid = build_grid(panel.T, "sim_s6")
    report = run_test(panel, grid, alpha=0.05, L=150, seed=4)
    by_id = render_interval_plot(report, ("s0", "s1"), panel)
    by_index = render_interval_plot(report, (0, 1), panel)
    reversed_ = render_interval_plot(report, ("s1", "s0"), panel)
    assert by_id == by_index == reversed_


def test_interval_plot_unknown_pair():
    report = fake_report(["a", "b"], {("a", "b"): ()}, {("a", "b"): ()})
    with pytest.raises(ConfigError, match="not present"):
        render_interval_plot(report, ("a", "zzz"))
    with pytest.raises(ConfigError, match="not present"):
        render_interval_plot(report, ("a", "a"))


def test_interval_plot_escapes_markup_in_ids():
    ids = ["a<1>", "b&2"]
    panel = fixed_panel(n=2, ids=ids)
    grid = build_grid(panel.T, "sim_s6")
    report = run_test(panel, grid, alpha=0.05, L=150, seed=4)
    svg = render_interval_plot(report, tuple(ids), panel)
    assert "a&lt;1&gt;" in svg and "b&amp;2" in svg
    assert "a<1>" not in svg
    ET.fromstring(svg)


# --------------------------------------------------------------- dendrogram


def test_dendrogram_two_leaves_single_junction():
    tree = hac_tree(np.array([2.5]), 2)
    svg = render_dendrogram(tree, 1)
    ET.fromstring(svg)
    # y-axis spans 0..2.5, junction bar sits at the merge height
    assert ">2.50<" in svg
    # default labels are 1-based leaf numbers
    assert ">1<" in svg and ">2<" in svg


def test_dendrogram_worked_heights():
    svg = golden_dendrogram_svg()
    ET.fromstring(svg)
    # heights 1 and 5 with pad 0.4 map to fixed pixel rows
    assert 'y2="282.76"' in svg  # height 1 junction
    assert 'y2="62.07"' in svg  # height 5 junction
    assert ">a<" in svg and ">b<" in svg and ">c<" in svg
    # two outlined cluster rectangles for n_groups=2
    outlined = [p for p in svg.split("\n") if 'stroke="#1b9e77"' in p or 'stroke="#d95f02"' in p]
    assert len(outlined) == 2


def test_dendrogram_deterministic():
    assert golden_dendrogram_svg() == golden_dendrogram_svg()


def test_dendrogram_validation():
    tree = hac_tree(np.array([1.0, 5.0, 4.0]), 3)
    with pytest.raises(ConfigError, match="labels"):
        render_dendrogram(tree, 2, labels=["a"])
    with pytest.raises(ConfigError, match="n_groups"):
        render_dendrogram(tree, 0)
    with pytest.raises(ConfigError, match="n_groups"):
        render_dendrogram(tree, 4)


def test_dendrogram_escapes_labels():
    tree = hac_tree(np.array([2.5]), 2)
    svg = render_dendrogram(tree, 1, labels=["x<y", "p&q"])
    assert "x&lt;y" in svg and "p&amp;q" in svg
    ET.fromstring(svg)


# -------------------------------------------------------------- golden files


def test_interval_plot_matches_golden():
    want = (GOLDEN / "interval_plot.svg").read_text(encoding="utf-8")
    assert golden_interval_svg() == want


def test_dendrogram_matches_golden():
    want = (GOLDEN / "dendrogram.svg").read_text(encoding="utf-8")
    assert golden_dendrogram_svg() == want
