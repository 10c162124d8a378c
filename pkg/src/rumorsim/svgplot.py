"""Dependency-free SVG line charts with byte-stable output.

Everything that could wobble between runs is pinned: the 800x500 viewport,
the color cycle, tick construction and number formatting.  Equal inputs give
byte-identical files, so charts can be golden-tested.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

WIDTH = 800
HEIGHT = 500
MARGIN_LEFT = 62
MARGIN_RIGHT = 150
MARGIN_TOP = 24
MARGIN_BOTTOM = 48

COLOR_CYCLE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
    "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
)


class PlotError(ValueError):
    """Raised for unusable plot inputs (missing columns, no data)."""


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tick_label(value: float) -> str:
    return f"{value:.4g}"


def read_csv_columns(csv_path) -> tuple[list[str], list[dict[str, str]]]:
    """Header and rows of a CSV file; raises PlotError when empty."""
    with open(csv_path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise PlotError(f"{csv_path}: no header row")
        rows = list(reader)
    return list(reader.fieldnames), rows


def render_svg_lineplot(csv_path, series_columns: Sequence[str], output_path,
                        x_column: Optional[str] = None,
                        group_by: Optional[str] = None,
                        title: Optional[str] = None) -> None:
    """Plot the named columns of a CSV file as polylines against one x column.

    ``x_column`` defaults to the first column.  With ``group_by``, rows are
    split by that column's value (in order of first appearance) and every
    (series, group) pair becomes its own labeled polyline.
    """
    header, rows = read_csv_columns(csv_path)
    if not rows:
        raise PlotError(f"{csv_path}: no data rows")
    if x_column is None:
        x_column = header[0]
    missing = [c for c in (x_column, *series_columns) if c not in header]
    if group_by is not None and group_by not in header:
        missing.append(group_by)
    if missing:
        raise PlotError(f"{csv_path}: missing columns {missing}; header has {header}")
    if not series_columns:
        raise PlotError("no series columns requested")

    if group_by is None:
        groups = [(None, rows)]
    else:
        order: list[str] = []
        bucket: dict[str, list[dict[str, str]]] = {}
        for row in rows:
            key = row[group_by]
            if key not in bucket:
                bucket[key] = []
                order.append(key)
            bucket[key].append(row)
        groups = [(key, bucket[key]) for key in order]

    series: list[tuple[str, list[tuple[float, float]]]] = []
    for key, group_rows in groups:
        for column in series_columns:
            label = column if key is None else f"{column} ({group_by}={key})"
            points = []
            for row in group_rows:
                try:
                    points.append((float(row[x_column]), float(row[column])))
                except ValueError as exc:
                    raise PlotError(f"{csv_path}: non-numeric value: {exc}") from exc
            series.append((label, points))

    xs = [p[0] for _, pts in series for p in pts]
    ys = [p[1] for _, pts in series for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(min(ys), 0.0), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    y_hi += (y_hi - y_lo) * 0.05

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x: float) -> float:
        return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    if title:
        lines.append(
            f'<text x="{WIDTH / 2:.0f}" y="16" text-anchor="middle" '
            f'font-family="monospace" font-size="13">{_escape(title)}</text>')

    ticks = 5
    for i in range(ticks + 1):
        yv = y_lo + (y_hi - y_lo) * i / ticks
        ypx = py(yv)
        lines.append(
            f'<line x1="{MARGIN_LEFT}" y1="{_fmt(ypx)}" '
            f'x2="{MARGIN_LEFT + plot_w}" y2="{_fmt(ypx)}" '
            'stroke="#dddddd" stroke-width="1"/>')
        lines.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{_fmt(ypx + 4)}" text-anchor="end" '
            f'font-family="monospace" font-size="11">{_tick_label(yv)}</text>')
        xv = x_lo + (x_hi - x_lo) * i / ticks
        xpx = px(xv)
        lines.append(
            f'<line x1="{_fmt(xpx)}" y1="{MARGIN_TOP + plot_h}" '
            f'x2="{_fmt(xpx)}" y2="{MARGIN_TOP + plot_h + 5}" '
            'stroke="#000000" stroke-width="1"/>')
        lines.append(
            f'<text x="{_fmt(xpx)}" y="{MARGIN_TOP + plot_h + 20}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{_tick_label(xv)}</text>')

    lines.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + plot_h}" '
        f'x2="{MARGIN_LEFT + plot_w}" y2="{MARGIN_TOP + plot_h}" '
        'stroke="#000000" stroke-width="1"/>')
    lines.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" '
        f'x2="{MARGIN_LEFT}" y2="{MARGIN_TOP + plot_h}" '
        'stroke="#000000" stroke-width="1"/>')

    legend_x = MARGIN_LEFT + plot_w + 12
    for idx, (label, points) in enumerate(series):
        color = COLOR_CYCLE[idx % len(COLOR_CYCLE)]
        coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in points)
        lines.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{coords}"/>')
        ly = MARGIN_TOP + 10 + idx * 16
        lines.append(
            f'<line x1="{legend_x}" y1="{ly}" x2="{legend_x + 18}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>')
        lines.append(
            f'<text x="{legend_x + 23}" y="{ly + 4}" text-anchor="start" '
            f'font-family="monospace" font-size="11">{_escape(label)}</text>')

    lines.append("</svg>")
    out = Path(output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines))
        handle.write("\n")
