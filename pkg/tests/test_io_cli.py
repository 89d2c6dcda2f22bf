"""Tests for CSV ingestion, report documents, the draw cache, and the CLI."""

import json
import math
import re

import numpy as np
import pytest
from numpy.testing import assert_allclose

from trendscan import (
    ConfigError,
    CriticalValue,
    CsvFormatError,
    DgpConfig,
    LocationScalePoint,
    MissingDataError,
    Series,
    TestReport,
    apply_draws_cache,
    build_grid,
    critical_value,
    draws_cache_key,
    experiment_from_dict,
    experiment_to_dict,
    generate_panel,
    load_draws_cache,
    load_panel_csv,
    read_report,
    replicate_rng,
    report_from_dict,
    report_to_dict,
    run_size_experiment,
    run_test,
    save_panel_csv,
    store_draws,
    validate_panel,
    write_report,
)
from trendscan.cli import main
from trendscan.multiscale import _DRAW_CACHE


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# --------------------------------------------------------------- CSV loading


def test_load_complete_two_series_file(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y,x1\n"
        "a,2001,1.5,0.25\n"
        "a,2002,2.5,0.5\n"
        "a,2003,3.5,0.75\n"
        "b,2001,-1.0,1.0\n"
        "b,2002,-2.0,2.0\n"
        "b,2003,-3.0,3.0\n",
    )
    panel, labels = load_panel_csv(path, return_time=True)
    hand = validate_panel(
        [
            Series(id="a", y=np.array([1.5, 2.5, 3.5]), x=np.array([0.25, 0.5, 0.75])),
            Series(id="b", y=np.array([-1.0, -2.0, -3.0]), x=np.array([1.0, 2.0, 3.0])),
        ]
    )
    assert labels == ("2001", "2002", "2003")
    assert [s.id for s in panel.series] == ["a", "b"]
    for got, want in zip(panel.series, hand.series):
        assert np.array_equal(got.y, want.y)
        assert np.array_equal(got.x, want.x)


def test_load_sorts_rows_by_time_label(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y\n"
        "a,03,30.0\n"
        "a,01,10.0\n"
        "b,01,1.0\n"
        "a,02,20.0\n"
        "b,03,3.0\n"
        "b,02,2.0\n",
    )
    panel, labels = load_panel_csv(path, return_time=True)
    assert labels == ("01", "02", "03")
    assert np.array_equal(panel.series[0].y, [10.0, 20.0, 30.0])
    assert np.array_equal(panel.series[1].y, [1.0, 2.0, 3.0])


def test_time_labels_sort_as_opaque_strings(tmp_path):
    # unpadded numerals order lexicographically: "10" before "2"
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y\na,2,2.0\na,10,10.0\nb,2,2.0\nb,10,10.0\n",
    )
    panel, labels = load_panel_csv(path, return_time=True)
    assert labels == ("10", "2")
    assert np.array_equal(panel.series[0].y, [10.0, 2.0])


def test_interior_gap_interpolated(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y\na,1,1.0\na,2,\na,3,3.0\nb,1,0.0\nb,2,0.0\nb,3,0.0\n",
    )
    panel = load_panel_csv(path, interpolate=True)
    assert_allclose(panel.series[0].y, [1.0, 2.0, 3.0], rtol=0, atol=1e-15)


def test_missing_tokens_recognized(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y\n"
        "a,1,0.0\na,2,NA\na,3,NaN\na,4,null\na,5,4.0\n"
        "b,1,0.0\nb,2,1.0\nb,3,2.0\nb,4,3.0\nb,5,4.0\n",
    )
    panel = load_panel_csv(path, interpolate=True)
    assert_allclose(panel.series[0].y, [0.0, 1.0, 2.0, 3.0, 4.0], rtol=0, atol=1e-15)


def test_missing_requires_interpolate_flag(tmp_path):
    path = write_csv(
        tmp_path / "p.csv", "series_id,time,y\na,1,1.0\na,2,\na,3,3.0\nb,1,0\nb,2,0\nb,3,0\n"
    )
    with pytest.raises(MissingDataError, match="'a'"):
        load_panel_csv(path)


def test_missing_cap_names_series(tmp_path):
    rows = ["series_id,time,y"]
    for t in range(1, 14):
        val = "" if 2 <= t <= 12 else str(float(t))  # 11 interior gaps
        rows.append(f"gappy,{t:02d},{val}")
        rows.append(f"ok,{t:02d},{float(t)}")
    path = write_csv(tmp_path / "p.csv", "\n".join(rows) + "\n")
    with pytest.raises(MissingDataError, match=r"'gappy' has 11 missing"):
        load_panel_csv(path, interpolate=True, missing_cap=10)
    panel = load_panel_csv(path, interpolate=True, missing_cap=11)
    assert_allclose(panel.series[0].y, np.arange(1.0, 14.0), rtol=0, atol=1e-12)


def test_boundary_missing_needs_opt_in(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y\na,1,\na,2,2.0\na,3,3.0\nb,1,0\nb,2,0\nb,3,0\n",
    )
    with pytest.raises(MissingDataError, match="boundary"):
        load_panel_csv(path, interpolate=True)
    panel = load_panel_csv(path, interpolate=True, extrapolate_boundary=True)
    # constant extension beyond the first observed value
    assert_allclose(panel.series[0].y, [2.0, 2.0, 3.0], rtol=0, atol=1e-15)


def test_covariate_gap_interpolated(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y,x1\na,1,1.0,4.0\na,2,2.0,\na,3,3.0,8.0\n"
        "b,1,0,0\nb,2,0,0\nb,3,0,0\n",
    )
    panel = load_panel_csv(path, interpolate=True)
    assert_allclose(panel.series[0].x[:, 0], [4.0, 6.0, 8.0], rtol=0, atol=1e-15)


def test_format_errors_cite_line_numbers(tmp_path):
    with pytest.raises(CsvFormatError, match="line 1: file is empty"):
        load_panel_csv(write_csv(tmp_path / "e.csv", ""))
    with pytest.raises(CsvFormatError, match="line 1: expected header"):
        load_panel_csv(write_csv(tmp_path / "h.csv", "id,t,value\na,1,2\n"))
    with pytest.raises(CsvFormatError, match="line 3: expected 3 fields, got 2"):
        load_panel_csv(
            write_csv(tmp_path / "f.csv", "series_id,time,y\na,1,2.0\na,2\n")
        )
    with pytest.raises(
        CsvFormatError, match=r"line 4: duplicate time '1' for series 'a' \(first seen on line 2\)"
    ):
        load_panel_csv(
            write_csv(
                tmp_path / "d.csv", "series_id,time,y\na,1,2.0\na,2,3.0\na,1,4.0\n"
            )
        )
    with pytest.raises(CsvFormatError, match="line 2: cannot parse y value 'abc' for series 'a'"):
        load_panel_csv(write_csv(tmp_path / "v.csv", "series_id,time,y\na,1,abc\n"))
    with pytest.raises(CsvFormatError, match="line 2: empty series_id"):
        load_panel_csv(write_csv(tmp_path / "s.csv", "series_id,time,y\n,1,2.0\n"))
    with pytest.raises(CsvFormatError, match="no data rows"):
        load_panel_csv(write_csv(tmp_path / "n.csv", "series_id,time,y\n"))
    with pytest.raises(CsvFormatError, match="cannot open"):
        load_panel_csv(tmp_path / "absent.csv")


def test_mismatched_time_labels_rejected(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y\na,1,1.0\na,2,2.0\nb,1,1.0\nb,3,2.0\n",
    )
    with pytest.raises(CsvFormatError, match="different time labels"):
        load_panel_csv(path)


def test_blank_lines_skipped(tmp_path):
    path = write_csv(
        tmp_path / "p.csv",
        "series_id,time,y\na,1,1.0\n\na,2,2.0\nb,1,3.0\nb,2,4.0\n",
    )
    panel = load_panel_csv(path)
    assert panel.T == 2


# ------------------------------------------------------------- CSV round trip


def test_csv_round_trip_exact(tmp_path):
    cfg = DgpConfig(scenario="null", n=4, T=37, d=1)
    panel = generate_panel(cfg, replicate_rng(0, 1, 0))
    path = tmp_path / "panel.csv"
    save_panel_csv(panel, path)
    back = load_panel_csv(path)
    assert back.n == panel.n and back.T == panel.T and back.d == panel.d
    for got, want in zip(back.series, panel.series):
        assert got.id == want.id
        assert np.array_equal(got.y, want.y)
        assert np.array_equal(got.x, want.x)


def test_csv_round_trip_low_digits_approximate(tmp_path):
    cfg = DgpConfig(scenario="null", n=2, T=10, d=0)
    panel = generate_panel(cfg, replicate_rng(0, 1, 1))
    path = tmp_path / "panel.csv"
    save_panel_csv(panel, path, digits=6)
    back = load_panel_csv(path)
    assert_allclose(back.series[0].y, panel.series[0].y, rtol=1e-5, atol=0)
    assert not np.array_equal(back.series[0].y, panel.series[0].y)


def test_save_panel_validation(tmp_path):
    cfg = DgpConfig(scenario="null", n=2, T=5, d=0)
    panel = generate_panel(cfg, replicate_rng(0, 1, 2))
    with pytest.raises(ConfigError):
        save_panel_csv(panel, tmp_path / "p.csv", digits=0)
    with pytest.raises(ConfigError):
        save_panel_csv(panel, tmp_path / "p.csv", time_labels=["1", "2"])


def test_save_custom_time_labels_round_trip(tmp_path):
    cfg = DgpConfig(scenario="null", n=2, T=4, d=0)
    panel = generate_panel(cfg, replicate_rng(0, 1, 3))
    labels = ["1999Q1", "1999Q2", "1999Q3", "1999Q4"]
    path = tmp_path / "p.csv"
    save_panel_csv(panel, path, time_labels=labels)
    _, back_labels = load_panel_csv(path, return_time=True)
    assert back_labels == tuple(labels)


# ------------------------------------------------------------ report documents


def trended_panel(n=3, T=40, seed=1):
    """Small panel with one strongly tilted series, so tests reject."""
    rng = np.random.default_rng(seed)
    u = np.arange(1, T + 1) / T
    series = [
        Series(id=f"s{i}", y=rng.normal(0.0, 0.05, T) + (5.0 * (u - 0.5) if i == 0 else 0.0))
        for i in range(n)
    ]
    return validate_panel(series)


def assert_reports_equal(a, b):
    assert a.alpha == b.alpha
    assert a.critical_value == b.critical_value
    assert a.global_reject == b.global_reject
    assert a.series_ids == b.series_ids
    assert a.rejections == b.rejections
    assert a.minimal == b.minimal
    assert a.diagnostics == b.diagnostics


def test_report_dict_round_trip():
    panel = trended_panel()
    grid = build_grid(panel.T, "sim_s6")
    report = run_test(panel, grid, alpha=0.1, L=150, seed=4)
    assert report.global_reject  # the tilt is large; sanity for the fixture
    back = report_from_dict(json.loads(json.dumps(report_to_dict(report))))
    assert_reports_equal(report, back)


def test_interval_record_window_convention():
    # [u-h, u+h] = [0.3, 0.7] covers observations 3..7 at T=10
    report = TestReport(
        alpha=0.1,
        critical_value=CriticalValue(alpha=0.1, q=1.0, L=100, seed=0),
        global_reject=True,
        series_ids=("a", "b"),
        rejections={("a", "b"): (LocationScalePoint(u=0.5, h=0.2),)},
        minimal={("a", "b"): (LocationScalePoint(u=0.5, h=0.2),)},
        diagnostics={"T": 10},
    )
    labels = [f"t{k:02d}" for k in range(1, 11)]
    doc = report_to_dict(report, time_labels=labels)
    rec = doc["pairs"][0]["rejected"][0]
    assert rec["u"] == 0.5 and rec["h"] == 0.2
    assert rec["start"] == pytest.approx(0.3) and rec["end"] == pytest.approx(0.7)
    assert rec["time_start"] == "t03"
    assert rec["time_end"] == "t07"
    plain = report_to_dict(report)["pairs"][0]["rejected"][0]
    assert "time_start" not in plain


def test_write_read_test_report(tmp_path):
    panel = trended_panel()
    grid = build_grid(panel.T, "sim_s6")
    report = run_test(panel, grid, alpha=0.05, L=150, seed=4)
    path = tmp_path / "report.json"
    write_report(report, path, time_labels=[f"{t:03d}" for t in range(1, 41)])
    back = read_report(path)
    assert_reports_equal(report, back)
    doc = json.loads(path.read_text())
    assert doc["format"] == "trendscan-report"
    assert doc["kind"] == "test"
    assert doc["seed"] == 4
    assert re.fullmatch(r"[0-9a-f]{16}", doc["config_hash"])
    assert "artifact_version" in doc


def test_write_report_byte_identical(tmp_path):
    panel = trended_panel()
    grid = build_grid(panel.T, "sim_s6")
    labels = [f"{t:03d}" for t in range(1, 41)]
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_report(run_test(panel, grid, alpha=0.05, L=150, seed=4), p1, time_labels=labels)
    write_report(run_test(panel, grid, alpha=0.05, L=150, seed=4), p2, time_labels=labels)
    assert p1.read_bytes() == p2.read_bytes()


def test_write_read_cluster_report(tmp_path):
    from trendscan import (
        augment_panel,
        build_group_structure,
        group_structure_to_dict,
        hac_tree,
        pair_statistics,
    )

    panel = trended_panel()
    grid = build_grid(panel.T, "sim_s6")
    report = run_test(panel, grid, alpha=0.05, L=150, seed=4)
    stats = pair_statistics(augment_panel(panel), grid)
    tree = hac_tree(stats.psi_max, panel.n)
    structure = build_group_structure(tree, stats.psi_max, report)
    section = group_structure_to_dict(structure, report.series_ids)
    path = tmp_path / "cluster.json"
    write_report(report, path, clustering=section)
    back, back_section = read_report(path)
    assert_reports_equal(report, back)
    assert back_section == json.loads(json.dumps(section))
    assert json.loads(path.read_text())["kind"] == "cluster"
    # groups are reported as series ids
    assert all(
        sid in report.series_ids for group in back_section["groups"] for sid in group
    )


def test_write_read_experiment_report(tmp_path):
    result = run_size_experiment(Ts=(60,), alphas=(0.1, 0.3), replicates=3, L=150, seed=3)
    path = tmp_path / "exp.json"
    write_report(result, path)
    back = read_report(path)
    assert back.kind == "size"
    assert back.replicates == 3
    assert back.config == result.config
    assert set(back.cells) == set(result.cells)
    for key in result.cells:
        assert back.cells[key] == result.cells[key]
    assert json.loads(path.read_text())["kind"] == "experiment"


def test_experiment_dict_round_trip_histograms():
    from trendscan import run_clustering_experiment

    result = run_clustering_experiment(Ts=(40,), alphas=(0.2,), replicates=3, L=120, seed=7)
    back = experiment_from_dict(json.loads(json.dumps(experiment_to_dict(result))))
    assert back.histograms == result.histograms  # int keys restored
    assert back.cells == result.cells


def test_write_report_rejects_other_objects(tmp_path):
    with pytest.raises(ConfigError):
        write_report({"not": "a report"}, tmp_path / "x.json")
    result = run_size_experiment(Ts=(60,), alphas=(0.1,), replicates=1, L=150, seed=3)
    with pytest.raises(ConfigError, match="clustering section"):
        write_report(result, tmp_path / "x.json", clustering={"n_groups": 1})


def test_read_report_rejects_foreign_documents(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"hello": 1}), encoding="utf-8")
    with pytest.raises(ConfigError, match="not a trendscan-report"):
        read_report(path)
    bad_kind = tmp_path / "bad.json"
    bad_kind.write_text(
        json.dumps({"format": "trendscan-report", "kind": "mystery", "body": {}}),
        encoding="utf-8",
    )
    with pytest.raises(ConfigError, match="unknown report kind"):
        read_report(bad_kind)
    with pytest.raises(ConfigError, match="cannot read report"):
        read_report(tmp_path / "absent.json")


# ----------------------------------------------------------------- draw cache


def test_draws_cache_key_format():
    grid = build_grid(40, "sim_s6")
    key = draws_cache_key(3, 40, grid, 150, 9)
    assert re.fullmatch(r"3\|40\|[0-9a-f]{16}\|150\|9", key)


def test_store_and_apply_draws(tmp_path):
    grid = build_grid(
        26, "custom", custom_spec=([0.5], [0.25])
    )
    path = tmp_path / "cache.json"
    assert not apply_draws_cache(path, 4, 26, grid, 120, 987004)
    store_draws(path, 4, 26, grid, 120, 987004)
    data = load_draws_cache(path)
    key = draws_cache_key(4, 26, grid, 120, 987004)
    assert list(data) == [key]
    assert len(data[key]) == 120
    try:
        assert apply_draws_cache(path, 4, 26, grid, 120, 987004)
        cv = critical_value(4, 26, grid, alpha=0.1, L=120, seed=987004)
        draws = np.sort(np.asarray(data[key]))
        assert cv.q == draws[math.ceil(0.9 * 120) - 1]
    finally:
        _DRAW_CACHE.pop((4, 26, grid, 120, 987004), None)


def test_apply_rigged_draws_controls_quantile(tmp_path):
    grid = build_grid(26, "custom", custom_spec=([0.4, 0.6], [0.2]))
    path = tmp_path / "cache.json"
    key = draws_cache_key(3, 26, grid, 100, 987005)
    values = [float(v) for v in range(1, 101)]
    path.write_text(json.dumps({key: values}), encoding="utf-8")
    try:
        assert apply_draws_cache(path, 3, 26, grid, 100, 987005)
        cv = critical_value(3, 26, grid, alpha=0.5, L=100, seed=987005)
        assert cv.q == 50.0
    finally:
        _DRAW_CACHE.pop((3, 26, grid, 100, 987005), None)


def test_load_draws_cache_errors(tmp_path):
    assert load_draws_cache(tmp_path / "absent.json") == {}
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="cannot read draws cache"):
        load_draws_cache(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="not a JSON object"):
        load_draws_cache(arr)


# ------------------------------------------------------------------------ CLI


@pytest.fixture()
def panel_csv(tmp_path):
    path = tmp_path / "panel.csv"
    save_panel_csv(trended_panel(), path)
    return str(path)


def test_cli_test_command(panel_csv, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(
        [
            "test",
            panel_csv,
            "--alpha",
            "0.1",
            "--alpha",
            "0.05",
            "--mc-draws",
            "150",
            "--seed",
            "4",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    text = capsys.readouterr().out
    assert "test alpha=0.1:" in text and "test alpha=0.05:" in text
    for tag in ("0.1", "0.05"):
        report = read_report(out / f"test_report_alpha{tag}.json")
        assert report.alpha == float(tag)
        assert report.critical_value.L == 150
    # matches a library-level run byte for byte
    direct = tmp_path / "direct.json"
    panel, labels = load_panel_csv(panel_csv, return_time=True)
    grid = build_grid(panel.T, "sim_s6")
    write_report(
        run_test(panel, grid, alpha=0.1, L=150, seed=4), direct, time_labels=labels
    )
    assert direct.read_bytes() == (out / "test_report_alpha0.1.json").read_bytes()


def test_cli_test_plots(panel_csv, tmp_path):
    out = tmp_path / "out"
    rc = main(
        ["test", panel_csv, "--mc-draws", "150", "--seed", "4", "--plots", "--out", str(out)]
    )
    assert rc == 0
    report = read_report(out / "test_report_alpha0.05.json")
    assert report.global_reject
    svgs = sorted(p.name for p in out.glob("pair_*.svg"))
    rejecting = sorted(
        f"pair_{i}_{j}_alpha0.05.svg"
        for (i, j), pts in report.rejections.items()
        if pts
    )
    assert svgs == rejecting and svgs
    for p in out.glob("pair_*.svg"):
        assert p.read_text(encoding="utf-8").lstrip().startswith("<svg")


def test_cli_cluster_command(panel_csv, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(
        [
            "cluster",
            panel_csv,
            "--alpha",
            "0.05",
            "--mc-draws",
            "150",
            "--seed",
            "4",
            "--plots",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    assert "cluster alpha=0.05: n_groups=" in capsys.readouterr().out
    report, section = read_report(out / "cluster_report_alpha0.05.json")
    assert section["n_groups"] == len(section["groups"])
    # series 0 carries the tilt, so it cannot share a group with the others
    groups = [set(g) for g in section["groups"]]
    home = next(g for g in groups if "s0" in g)
    assert home == {"s0"}
    assert (out / "dendrogram_alpha0.05.svg").exists()


def test_cli_cluster_fixed_groups(panel_csv, tmp_path):
    out = tmp_path / "out"
    rc = main(
        [
            "cluster",
            panel_csv,
            "--mc-draws",
            "150",
            "--seed",
            "4",
            "--n-groups",
            "2",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    _, section = read_report(out / "cluster_report_alpha0.05.json")
    assert section["n_groups"] == 2


def test_cli_cluster_single_alpha_only(panel_csv, tmp_path, capsys):
    rc = main(
        [
            "cluster",
            panel_csv,
            "--alpha",
            "0.05",
            "--alpha",
            "0.1",
            "--mc-draws",
            "150",
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_custom_grid(panel_csv, tmp_path):
    spec = tmp_path / "grid.json"
    spec.write_text(json.dumps({"u": [0.3, 0.5, 0.7], "h": [0.1, 0.2]}), encoding="utf-8")
    out = tmp_path / "out"
    rc = main(
        [
            "test",
            panel_csv,
            "--grid",
            f"custom:{spec}",
            "--mc-draws",
            "150",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    report = read_report(out / "test_report_alpha0.05.json")
    assert report.diagnostics["grid_size"] == 6


def test_cli_custom_grid_errors(panel_csv, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"u": [0.5]}), encoding="utf-8")
    rc = main(["test", panel_csv, "--grid", f"custom:{bad}", "--out", str(tmp_path)])
    assert rc == 2
    assert "custom grid" in capsys.readouterr().err
    rc = main(["test", panel_csv, "--grid", "nope", "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown --grid" in capsys.readouterr().err


def test_cli_lrv_flag(panel_csv, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(
        ["test", panel_csv, "--lrv", "ar:2", "--mc-draws", "150", "--out", str(out)]
    )
    assert rc == 0
    report = read_report(out / "test_report_alpha0.05.json")
    assert report.diagnostics["lrv_method"] == "ar_plugin"
    rc = main(["test", panel_csv, "--lrv", "bogus", "--out", str(out)])
    assert rc == 2
    assert "unknown --lrv" in capsys.readouterr().err


def test_cli_cache_round_trip(panel_csv, tmp_path):
    out = tmp_path / "out"
    cache = tmp_path / "cache.json"
    grid = build_grid(40, "sim_s6")
    key = draws_cache_key(3, 40, grid, 100, 987006)
    cache.write_text(
        json.dumps({key: [float(v) for v in range(1, 101)]}), encoding="utf-8"
    )
    try:
        rc = main(
            [
                "test",
                panel_csv,
                "--alpha",
                "0.5",
                "--mc-draws",
                "100",
                "--seed",
                "987006",
                "--cache",
                str(cache),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        report = read_report(out / "test_report_alpha0.5.json")
        # the rigged cached draws drove the critical value
        assert report.critical_value.q == 50.0
        # the run re-persisted the same key
        assert list(load_draws_cache(cache)) == [key]
    finally:
        _DRAW_CACHE.pop((3, 40, grid, 100, 987006), None)


def test_cli_cache_created_when_missing(panel_csv, tmp_path):
    out = tmp_path / "out"
    cache = tmp_path / "cache.json"
    grid = build_grid(40, "sim_s6")
    try:
        rc = main(
            [
                "test",
                panel_csv,
                "--mc-draws",
                "150",
                "--seed",
                "987007",
                "--cache",
                str(cache),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        data = load_draws_cache(cache)
        key = draws_cache_key(3, 40, grid, 150, 987007)
        assert list(data) == [key] and len(data[key]) == 150
    finally:
        _DRAW_CACHE.pop((3, 40, grid, 150, 987007), None)


def test_cli_simulate_size(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(
        [
            "simulate",
            "--experiment",
            "size",
            "--T",
            "60",
            "--alpha",
            "0.2",
            "--replicates",
            "4",
            "--mc-draws",
            "150",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    text = capsys.readouterr().out
    assert "size T=60 alpha=0.2:" in text
    result = read_report(out / "experiment_size.json")
    assert result.kind == "size"
    assert result.replicates == 4
    assert set(result.cells) == {(60, 0.2)}


def test_cli_simulate_power(tmp_path):
    out = tmp_path / "out"
    rc = main(
        [
            "simulate",
            "--experiment",
            "power",
            "--T",
            "60",
            "--alpha",
            "0.2",
            "--b",
            "0.0",
            "--b",
            "6.0",
            "--replicates",
            "3",
            "--mc-draws",
            "150",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    result = read_report(out / "experiment_power.json")
    assert set(result.cells) == {(60, 0.2, 0.0), (60, 0.2, 6.0)}


def test_cli_simulate_clustering(tmp_path):
    out = tmp_path / "out"
    rc = main(
        [
            "simulate",
            "--experiment",
            "clustering",
            "--T",
            "40",
            "--alpha",
            "0.2",
            "--replicates",
            "3",
            "--mc-draws",
            "120",
            "--seed",
            "7",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    result = read_report(out / "experiment_clustering.json")
    assert result.kind == "clustering"
    assert result.histograms is not None


def test_cli_errors_exit_2(tmp_path, capsys):
    missing = tmp_path / "absent.csv"
    rc = main(["test", str(missing), "--out", str(tmp_path)])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")
    gap = tmp_path / "gap.csv"
    gap.write_text(
        "series_id,time,y\na,1,1.0\na,2,\na,3,3.0\nb,1,0\nb,2,0\nb,3,0\n",
        encoding="utf-8",
    )
    rc = main(["test", str(gap), "--out", str(tmp_path)])
    assert rc == 2
    assert "missing values" in capsys.readouterr().err
