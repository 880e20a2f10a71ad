"""Tests for the run bundle writers."""

import csv
import math

import msgspec
import pytest
from openpyxl import load_workbook

from wedgeflow.models import EventRecord
from wedgeflow.services import bundle_export, tracking
from wedgeflow.services.run_config import parse_config


@pytest.mark.parametrize("value,expected", [
    (None, ""),
    (True, "true"),
    (7, "7"),
    ("weak-weak", "weak-weak"),
    (0.1, "0.10000000000000001"),
    (-2.0, "-2"),
])
def test_fmt(value, expected):
    assert bundle_export.fmt(value) == expected


@pytest.mark.parametrize("value", [math.nan, math.inf])
def test_fmt_refuses_non_finite(value):
    with pytest.raises(ValueError):
        bundle_export.fmt(value)


def test_write_bundle_files(straight_history, tmp_path):
    paths = bundle_export.write_bundle(straight_history, tmp_path / "bundle")
    assert [p.name for p in paths] == ["events.jsonl", "functionals.csv", "solution.csv", "pattern.svg"]
    assert all(p.exists() for p in paths)


def test_events_jsonl_decodes_to_records(straight_history, tmp_path):
    path = bundle_export.write_events(straight_history, tmp_path / "events.jsonl")
    lines = path.read_bytes().splitlines()
    assert len(lines) == len(straight_history.events)
    records = [msgspec.json.decode(line, type=EventRecord) for line in lines]
    assert records == straight_history.events


def test_functionals_csv(perturbed_history, tmp_path):
    bundle_export.write_bundle(perturbed_history, tmp_path)
    with (tmp_path / "functionals.csv").open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == bundle_export.FUNCTIONALS_HEADER
    assert len(rows) == len(perturbed_history.events) + 1
    assert [r[2] for r in rows[1:]] == [e.kind for e in perturbed_history.events]
    assert {r[-1] for r in rows[1:]} <= {"pass", "fail"}


def test_solution_rows_default_grid(straight_history):
    rows = bundle_export.solution_rows(straight_history)
    assert len(rows) in (bundle_export.DEFAULT_SAMPLES - 1, bundle_export.DEFAULT_SAMPLES)
    assert all(r[0] == 1.0 for r in rows)
    assert rows[0][1] == -2.0
    # the bottom of the grid lies ahead of the shock
    assert rows[0][2:] == straight_history.final.states[0].as_array().tolist()


def test_solution_rows_explicit_grid(straight_text):
    cfg = parse_config(straight_text + "sampling.x = 0.25, 0.5\nsampling.y_min = -1\nsampling.y_max = 0.5\n"
                                       "sampling.ny = 4\n")
    rows = bundle_export.solution_rows(tracking.run(cfg))
    # y = 0.5 is above the wall at both stations
    assert len(rows) == 6
    assert sorted({r[0] for r in rows}) == [0.25, 0.5]


def test_bundle_is_deterministic(perturbed_history, tmp_path):
    first = bundle_export.write_bundle(perturbed_history, tmp_path / "a")
    second = bundle_export.write_bundle(perturbed_history, tmp_path / "b")
    for a, b in zip(first, second, strict=True):
        assert a.read_bytes() == b.read_bytes()


def test_pattern_is_svg(straight_history):
    svg = bundle_export.render_pattern(straight_history)
    assert "<svg" in svg
    assert "events=1" in svg


def test_functionals_xlsx(perturbed_history, tmp_path):
    paths = bundle_export.write_bundle(perturbed_history, tmp_path, xlsx=True)
    assert paths[-1].name == "functionals.xlsx"
    ws = load_workbook(paths[-1]).active
    assert ws.title == "Functionals"
    assert [c.value for c in ws[1]] == bundle_export.FUNCTIONALS_HEADER
    assert ws.max_row == len(perturbed_history.events) + 1
    assert ws.freeze_panes == "A2"
