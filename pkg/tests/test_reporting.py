"""Delimited flattening and figure rendering of search reports."""

from __future__ import annotations

import csv
import dataclasses
import io

import pytest

from hopf import (
    DiscountSpec,
    SearchReport,
    StrategyShape,
    advantage_search,
    flatten_report,
    gyni_env,
    render_figure,
    write_csv,
)

FIELDS = (
    "environment_id",
    "mode",
    "gamma",
    "seed",
    "budget",
    "shape_memory",
    "shape_parties",
    "shape_horizon",
    "candidates_total",
    "candidates_valid",
    "candidates_ordered",
    "best_general_value",
    "best_ordered_value",
    "best_ordered_order",
    "advantage",
    "best_general_table",
    "best_ordered_table",
)


@pytest.fixture(scope="module")
def report() -> SearchReport:
    return advantage_search(
        gyni_env(2),
        StrategyShape(1, ((2, 2), (2, 2))),
        DiscountSpec(0.5),
        environment_id="bench",
    )


class TestFlatten:
    def test_row_grid(self, report):
        rows = list(csv.reader(io.StringIO(flatten_report(report))))
        assert rows[0] == ["field", "value"]
        assert [field for field, _ in rows[1:]] == list(FIELDS)
        assert all(len(row) == 2 for row in rows)

    def test_values_on_the_two_party_benchmark(self, report):
        got = dict(csv.reader(io.StringIO(flatten_report(report))))
        assert got["environment_id"] == "bench"
        assert got["mode"] == "exhaustive"
        assert got["gamma"] == "0.5"
        assert got["seed"] == "0"
        assert got["budget"] == str(report.budget)
        assert got["shape_memory"] == "1"
        assert got["shape_parties"] == "2x2;2x2"
        assert got["shape_horizon"] == ""
        assert got["candidates_total"] == "256"
        assert got["candidates_valid"] == "12"
        assert got["candidates_ordered"] == "12"
        assert got["best_general_value"] == "1.0"
        assert got["best_ordered_value"] == "1.0"
        assert got["best_ordered_order"] == "1>0"
        assert got["advantage"] == "0.0"

    def test_tables_are_flat_integer_runs(self, report):
        got = dict(csv.reader(io.StringIO(flatten_report(report))))
        for key, scored in (
            ("best_general_table", report.best_general),
            ("best_ordered_table", report.best_ordered),
        ):
            cells = got[key].split(" ")
            entries = scored.strategy.table.entries
            assert len(cells) == sum(len(e) for e in entries)
            assert cells == [str(c) for e in entries for c in e]

    def test_floats_use_the_canonical_form(self, report):
        tweaked = dataclasses.replace(
            report,
            gamma=0.1,
            advantage=0.0,
            best_general=dataclasses.replace(report.best_general, value=1.0),
        )
        got = dict(csv.reader(io.StringIO(flatten_report(tweaked))))
        assert got["gamma"] == "0.10000000000000001"
        assert got["best_general_value"] == "1.0"

    def test_optional_fields_render_empty(self, report):
        tweaked = dataclasses.replace(
            report,
            shape=StrategyShape(1, ((2, 2), (2, 2)), horizon=5),
            best_ordered=dataclasses.replace(report.best_ordered, order=None),
        )
        got = dict(csv.reader(io.StringIO(flatten_report(tweaked))))
        assert got["shape_horizon"] == "5"
        assert got["best_ordered_order"] == ""
        plain = dict(csv.reader(io.StringIO(flatten_report(report))))
        assert plain["shape_horizon"] == ""

    def test_text_is_newline_terminated_without_carriage_returns(self, report):
        text = flatten_report(report)
        assert text.endswith("\n")
        assert "\r" not in text


class TestWriteCsv:
    def test_file_matches_flatten(self, report, tmp_path):
        path = tmp_path / "report.csv"
        write_csv(report, path)
        assert path.read_text(encoding="utf-8") == flatten_report(report)
        assert path.read_bytes().endswith(b"\n")
        assert b"\r" not in path.read_bytes()

    def test_accepts_string_paths(self, report, tmp_path):
        path = tmp_path / "report.csv"
        write_csv(report, str(path))
        assert path.exists()


class TestRenderFigure:
    def test_writes_a_png(self, report, tmp_path):
        path = tmp_path / "report.png"
        render_figure(report, path)
        data = path.read_bytes()
        assert data.startswith(b"\x89PNG\r\n\x1a\n")
        assert len(data) > 1000

    def test_renders_are_byte_identical(self, report, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render_figure(report, a)
        render_figure(report, b)
        assert a.read_bytes() == b.read_bytes()

    def test_distinct_reports_differ(self, report, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render_figure(report, a)
        render_figure(dataclasses.replace(report, environment_id="other"), b)
        assert a.read_bytes() != b.read_bytes()

    def test_unnamed_environment_renders(self, report, tmp_path):
        path = tmp_path / "anon.png"
        render_figure(dataclasses.replace(report, environment_id=""), path)
        assert path.read_bytes().startswith(b"\x89PNG")
