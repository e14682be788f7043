"""Static SVG charts written as plain text.

No plotting library is involved, so the same bundle always yields the same
bytes. File names depend only on region, feature and plot kind:

* ``{region}_{feature}_box.svg``: each method's ranks across measures,
* ``{region}_{feature}_horizon.svg``: horizon-ranking step chart,
* ``{region}_one_step.svg``: observed curve with one-step-ahead overlays,
* ``overall_box.svg``: each method's feature-level consensus across regions
  (written when at least two regions were evaluated).
"""
from __future__ import annotations

import logging
from html import escape
from pathlib import Path
from typing import Sequence

from .pipeline import ReportBundle, safe_name
from .ranking import box_stats

logger = logging.getLogger(__name__)

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 120, 40, 50
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _num(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    """Maps data coordinates onto the plot area and collects SVG elements."""

    def __init__(self, title, xlim, ylim, xlabel="", ylabel="", invert_y=False):
        self.parts = []
        self.xlim = xlim if xlim[1] > xlim[0] else (xlim[0] - 0.5, xlim[0] + 0.5)
        self.ylim = ylim if ylim[1] > ylim[0] else (ylim[0] - 0.5, ylim[0] + 0.5)
        self.invert_y = invert_y
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def x(self, v):
        lo, hi = self.xlim
        return LEFT + (v - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)

    def y(self, v):
        lo, hi = self.ylim
        frac = (v - lo) / (hi - lo)
        if self.invert_y:
            frac = 1.0 - frac
        return HEIGHT - BOTTOM - frac * (HEIGHT - TOP - BOTTOM)

    def line(self, x1, y1, x2, y2, color="#000", width=1.0, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" y2="{_num(y2)}" '
            f'stroke="{color}" stroke-width="{width}"{extra}/>'
        )

    def rect(self, x, y, w, h, color):
        self.parts.append(
            f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(w)}" height="{_num(h)}" '
            f'fill="{color}" fill-opacity="0.35" stroke="{color}"/>'
        )

    def circle(self, x, y, color, r=2.5):
        self.parts.append(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="{r}" fill="none" stroke="{color}"/>')

    def polyline(self, points, color, width=1.5):
        pts = " ".join(f"{_num(a)},{_num(b)}" for a, b in points)
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def text(self, x, y, s, anchor="middle", size=11, rotate=None):
        rot = f' transform="rotate({rotate} {_num(x)} {_num(y)})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{_num(x)}" y="{_num(y)}" font-size="{size}" text-anchor="{anchor}"{rot}>{escape(str(s))}</text>'
        )

    def axes(self, yticks, xticks=None):
        x0, x1 = LEFT, WIDTH - RIGHT
        y0, y1 = HEIGHT - BOTTOM, TOP
        self.line(x0, y0, x1, y0)
        self.line(x0, y0, x0, y1)
        for t in yticks:
            self.line(x0 - 4, self.y(t), x0, self.y(t))
            self.text(x0 - 6, self.y(t) + 4, _tick(t), anchor="end", size=10)
        for pos, label in xticks or ():
            self.line(self.x(pos), y0, self.x(pos), y0 + 4)
            self.text(self.x(pos), y0 + 16, label, size=10)
        self.text(WIDTH / 2, 22, self.title, size=13)
        if self.xlabel:
            self.text((x0 + x1) / 2, HEIGHT - 12, self.xlabel)
        if self.ylabel:
            self.text(16, (y0 + y1) / 2, self.ylabel, rotate=-90)

    def legend(self, names):
        for i, name in enumerate(names):
            yy = TOP + 14 * i + 6
            color = PALETTE[i % len(PALETTE)]
            self.line(WIDTH - RIGHT + 10, yy, WIDTH - RIGHT + 28, yy, color=color, width=2)
            self.text(WIDTH - RIGHT + 32, yy + 4, name, anchor="start", size=10)

    def svg(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">'
        )
        body = "\n".join(self.parts)
        return f'<?xml version="1.0" encoding="UTF-8"?>\n{head}\n<rect width="100%" height="100%" fill="#fff"/>\n{body}\n</svg>\n'


def _tick(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.3g}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    step = (hi - lo) / n
    return [lo + i * step for i in range(n + 1)]


def box_chart(title: str, groups: Sequence[tuple[str, Sequence[float]]], ylabel="rank") -> str:
    """One Tukey box per (label, values) group; rank axes put 1 at the top."""
    values = [v for _, vs in groups for v in vs]
    hi = max(values + [1.0])
    c = _Canvas(title, (0.5, len(groups) + 0.5), (1.0, max(hi, 2.0)), ylabel=ylabel, invert_y=True)
    c.axes(range(1, int(max(hi, 2.0)) + 1), [(i + 1, name) for i, (name, _) in enumerate(groups)])
    half = 0.3
    for i, (_, vs) in enumerate(groups):
        if not vs:
            continue
        color = PALETTE[i % len(PALETTE)]
        s = box_stats(vs)
        xc = i + 1
        x0, x1 = c.x(xc - half), c.x(xc + half)
        c.line(c.x(xc), c.y(s.whisker_low), c.x(xc), c.y(s.q1), color=color)
        c.line(c.x(xc), c.y(s.q3), c.x(xc), c.y(s.whisker_high), color=color)
        c.line(c.x(xc - half / 2), c.y(s.whisker_low), c.x(xc + half / 2), c.y(s.whisker_low), color=color)
        c.line(c.x(xc - half / 2), c.y(s.whisker_high), c.x(xc + half / 2), c.y(s.whisker_high), color=color)
        top, bottom = sorted((c.y(s.q1), c.y(s.q3)))
        c.rect(x0, top, x1 - x0, max(bottom - top, 1.0), color)
        c.line(x0, c.y(s.median), x1, c.y(s.median), color="#000", width=2)
        for o in s.outliers:
            c.circle(c.x(xc), c.y(o), color)
    return c.svg()


def step_chart(title: str, ks: Sequence[int], series: Sequence[tuple[str, Sequence]], ylabel="rank") -> str:
    """Step lines over prediction times; ``None`` entries break a line."""
    values = [v for _, vs in series for v in vs if v is not None]
    hi = max(values + [2.0])
    lo_k, hi_k = min(ks), max(ks) + 1
    c = _Canvas(title, (lo_k, hi_k), (1.0, hi), xlabel="prediction week k", ylabel=ylabel, invert_y=True)
    c.axes(range(1, int(hi) + 1), [(k, str(k)) for k in _sparse(ks)])
    for j, (_, vs) in enumerate(series):
        color = PALETTE[j % len(PALETTE)]
        pts = []
        for k, v in zip(ks, vs):
            if v is None:
                if len(pts) > 1:
                    c.polyline(pts, color)
                pts = []
                continue
            pts += [(c.x(k), c.y(v)), (c.x(k + 1), c.y(v))]
        if len(pts) > 1:
            c.polyline(pts, color)
    c.legend([name for name, _ in series])
    return c.svg()


def line_chart(title: str, observed: tuple[Sequence[int], Sequence[float]], series) -> str:
    """Observed curve (thick black) under one line per method."""
    weeks, values = observed
    all_x = list(weeks) + [w for _, (ws, _) in series for w in ws]
    all_y = list(values) + [v for _, (_, vs) in series for v in vs]
    hi = max(all_y + [1.0])
    c = _Canvas(title, (min(all_x), max(all_x)), (0.0, hi * 1.05), xlabel="week", ylabel="cases")
    c.axes(_ticks(0.0, hi * 1.05), [(w, str(w)) for w in _sparse(sorted(set(all_x)))])
    c.polyline([(c.x(w), c.y(v)) for w, v in zip(weeks, values)], "#000", width=2.5)
    for j, (_, (ws, vs)) in enumerate(series):
        if len(ws):
            c.polyline([(c.x(w), c.y(v)) for w, v in zip(ws, vs)], PALETTE[j % len(PALETTE)])
    c.legend([name for name, _ in series])
    return c.svg()


def _sparse(xs, n=10):
    xs = list(xs)
    step = max(1, -(-len(xs) // n))
    return xs[::step]


def _write(path: Path, text: str) -> Path:
    path.write_bytes(text.encode("utf-8"))
    return path


def emit_plots(bundle: ReportBundle, out_dir) -> list[Path]:
    """Write every chart for ``bundle`` and return the paths in write order."""
    if bundle.empty:
        logger.warning("empty report bundle: no plots written")
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rid, r in bundle.regions.items():
        base = safe_name(rid)
        for fid, t in r.features.items():
            stem = f"{base}_{safe_name(fid)}"
            groups = [(m, [float(x) for x in row]) for m, row in zip(t.methods, t.ranks)]
            written.append(_write(out / f"{stem}_box.svg", box_chart(f"{rid} {fid}: ranks across measures", groups)))
            if t.horizon_ks:
                series = [(m, [row[j] for row in t.horizon_ranks]) for j, m in enumerate(t.methods)]
                written.append(
                    _write(out / f"{stem}_horizon.svg", step_chart(f"{rid} {fid}: horizon ranking", t.horizon_ks, series))
                )
        if r.one_step:
            series = [(m, (d["weeks"], d["values"])) for m, d in r.one_step.items()]
            written.append(
                _write(
                    out / f"{base}_one_step.svg",
                    line_chart(f"{rid}: one-step-ahead forecasts", (r.observed_weeks, r.observed_values), series),
                )
            )
    if len(bundle.region_ids) >= 2:
        groups = []
        for m in bundle.methods:
            vals = [
                float(bundle.regions[rid].feature_average[bundle.regions[rid].methods.index(m)])
                for rid in bundle.region_ids
            ]
            groups.append((m, vals))
        written.append(_write(out / "overall_box.svg", box_chart("consensus rank across regions", groups)))
    return written
