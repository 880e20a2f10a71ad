"""Run output bundles.

A simulate bundle holds events.jsonl, functionals.csv, solution.csv and
pattern.svg, plus functionals.xlsx on request. Numbers are written with 17
significant digits; a non-finite number is a bug upstream and raises.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path

import msgspec
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter
from reportlab.graphics import renderSVG
from reportlab.graphics.shapes import Drawing, Line, PolyLine, String
from reportlab.lib import colors

from wedgeflow.models import History
from wedgeflow.services import tracking

logger = logging.getLogger(__name__)

FUNCTIONALS_HEADER = ["index", "x", "kind", "V", "Q_A", "Q_1", "Q_b", "Q_w", "Q", "F", "nonphysical",
                      "delta_F", "delta_Q", "verdict"]
SOLUTION_HEADER = ["x", "y", "u", "v", "p", "rho"]

DEFAULT_SAMPLES = 51


def fmt(value) -> str:
    """17 significant digits; ints and strings pass through."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"refusing to write non-finite value {value!r}")
    return f"{value:.17g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logger.info("wrote %s", path)
    return path


# ---------------------------------------------------------------------------
# Simulate bundle
# ---------------------------------------------------------------------------

def write_events(history: History, path) -> Path:
    path = Path(path)
    encoder = msgspec.json.Encoder()
    with path.open("wb") as fh:
        for record in history.events:
            fh.write(encoder.encode(record))
            fh.write(b"\n")
    logger.info("wrote %s (%d events)", path, len(history.events))
    return path


def functionals_rows(history: History) -> list[list]:
    rows = []
    for record, report in zip(history.events, history.reports, strict=True):
        q = report.Q
        rows.append([record.index, record.x, record.kind, report.V, q.q_approach, q.q_strong, q.q_boundary,
                     q.q_wedge, q.total, report.F, report.nonphysical, record.delta_F, record.delta_Q,
                     record.verdict])
    return rows


def solution_rows(history: History) -> list[list]:
    """(x, y, u, v, p, rho) on the sampling grid; points above the wall are skipped."""
    grid = history.config.sampling
    stations = grid.x or (history.config.tracking.x_max,)
    if grid.ny > 0:
        ys = grid.ys()
    else:
        low = tracking.y_bottom(history)
        top = max(0.0, history.boundary.g(history.config.tracking.x_max))
        step = (top - low) / (DEFAULT_SAMPLES - 1)
        ys = [low + k * step for k in range(DEFAULT_SAMPLES)]
    rows = []
    for x in stations:
        for y, state in zip(ys, tracking.sample(history, x, ys), strict=True):
            if state is not None:
                rows.append([x, y, state.u, state.v, state.p, state.rho])
    return rows


_FAMILY_COLORS = {
    "1": colors.HexColor("#1f4e9c"),
    "2": colors.HexColor("#2e8b57"),
    "3": colors.HexColor("#b8860b"),
    "4": colors.HexColor("#c0392b"),
    "NP": colors.HexColor("#7f8c8d"),
}


def render_pattern(history: History, width: int = 720, height: int = 480) -> str:
    """SVG scene of every front trajectory and the wall."""
    x_max = history.config.tracking.x_max
    boundary = history.boundary
    segments = tracking.front_segments(history)
    wall_xs = sorted({0.0, x_max, *(a for a, _ in boundary.vertices if a < x_max)})
    wall = [(x, boundary.g(x)) for x in wall_xs]
    y_top = max(y for _, y in wall)
    y_low = min([y for _, y in wall] + [tracking.y_bottom(history)]
                + [f.y_at(end) for f, _, end in segments])
    span_y = max(y_top - y_low, 1e-12)
    margin = 30.0

    def px(x, y):
        return (margin + (width - 2 * margin) * x / x_max,
                margin + (height - 2 * margin) * (y - y_low) / span_y)

    d = Drawing(width, height)
    for front, start, end in segments:
        x0, y0 = px(start, front.y_at(start))
        x1, y1 = px(end, front.y_at(end))
        if front.strong:
            d.add(Line(x0, y0, x1, y1, strokeColor=colors.black, strokeWidth=2.5))
        elif front.nonphysical:
            d.add(Line(x0, y0, x1, y1, strokeColor=_FAMILY_COLORS["NP"], strokeWidth=0.6,
                       strokeDashArray=[3, 2]))
        else:
            d.add(Line(x0, y0, x1, y1, strokeColor=_FAMILY_COLORS[front.family.label], strokeWidth=0.8))
    points = []
    for x, y in wall:
        points.extend(px(x, y))
    d.add(PolyLine(points, strokeColor=colors.black, strokeWidth=2))
    d.add(String(margin, height - margin / 2, f"eps={history.config.tracking.eps:g}  events={len(history.events)}",
                 fontName="Helvetica", fontSize=10))
    return renderSVG.drawToString(d)


HEADER_FILL = PatternFill(start_color="FF374151", end_color="FF374151", fill_type="solid")
HEADER_FONT = Font(name="Calibri", bold=True, color="FFFFFFFF", size=11)
BODY_FONT = Font(name="Calibri", size=10)
BORDER = Border(
    left=Side(style="thin", color="FFD1D5DB"),
    right=Side(style="thin", color="FFD1D5DB"),
    top=Side(style="thin", color="FFD1D5DB"),
    bottom=Side(style="thin", color="FFD1D5DB"),
)


def write_functionals_xlsx(history: History, path) -> Path:
    """functionals.csv as a styled workbook."""
    wb = Workbook()
    ws = wb.active
    ws.title = "Functionals"
    ws.append(FUNCTIONALS_HEADER)
    for cell in ws[1]:
        cell.fill = HEADER_FILL
        cell.font = HEADER_FONT
        cell.alignment = Alignment(horizontal="left", vertical="center")
        cell.border = BORDER
    for row in functionals_rows(history):
        ws.append(row)
    for row in ws.iter_rows(min_row=2):
        for cell in row:
            cell.font = BODY_FONT
            cell.border = BORDER
    for col in ws.columns:
        letter = get_column_letter(col[0].column)
        ws.column_dimensions[letter].width = max(10, min(24, max(len(str(c.value or "")) for c in col) + 2))
    ws.freeze_panes = "A2"
    path = Path(path)
    wb.save(path)
    logger.info("wrote %s", path)
    return path


def write_bundle(history: History, out_dir, xlsx: bool = False) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        write_events(history, out_dir / "events.jsonl"),
        write_csv(out_dir / "functionals.csv", FUNCTIONALS_HEADER, functionals_rows(history)),
        write_csv(out_dir / "solution.csv", SOLUTION_HEADER, solution_rows(history)),
    ]
    svg = out_dir / "pattern.svg"
    svg.write_text(render_pattern(history), encoding="utf-8")
    logger.info("wrote %s", svg)
    paths.append(svg)
    if xlsx:
        paths.append(write_functionals_xlsx(history, out_dir / "functionals.xlsx"))
    return paths
