"""Minimal SVG line charts for campaign medians.

Output depends only on the rows passed in and uses fixed-precision number
formatting, so re-rendering from a results CSV reproduces the file byte for
byte.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 80, "right": 150, "top": 40, "bottom": 55}
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _log_ticks(lo: float, hi: float) -> list[float]:
    return [10.0**e for e in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)]


def line_chart(series: dict[str, list[tuple[float, float]]], title: str, xlabel: str, ylabel: str, log_y: bool = True) -> str:
    """Render ``{label: [(x, y), ...]}`` as an SVG document string.

    Non-finite or (on a log axis) non-positive points are dropped.
    """
    def keep(y):
        return math.isfinite(y) and (y > 0 or not log_y)

    pts = [(x, y) for s in series.values() for x, y in s if keep(y)]
    xs = [p[0] for p in pts] or [0.0, 1.0]
    ys = [p[1] for p in pts] or [1.0, 10.0]
    x0, x1 = min(xs), max(xs)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    if log_y:
        ticks = _log_ticks(min(ys), max(ys))
        if len(ticks) < 2:
            ticks = [ticks[0], ticks[0] * 10]
        ty = [math.log10(t) for t in ticks]
        y0, y1 = ty[0], ty[-1]
    else:
        y0, y1 = min(0.0, min(ys)), max(ys) * 1.05 or 1.0
        ticks = [y0 + (y1 - y0) * i / 5 for i in range(6)]
        ty = ticks

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        v = math.log10(y) if log_y else y
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{_f(WIDTH / 2)}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    left, top = MARGIN["left"], MARGIN["top"]
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in ticks:
        y = py(t)
        out.append(f'<line x1="{left}" x2="{left + pw}" y1="{_f(y)}" y2="{_f(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 6}" y="{_f(y + 4)}" text-anchor="end">{t:g}</text>')
    xticks = sorted({x for s in series.values() for x, _ in s})
    for x in xticks:
        out.append(f'<text x="{_f(px(x))}" y="{top + ph + 18}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{_f(left + pw / 2)}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{_f(top + ph / 2)}" text-anchor="middle" transform="rotate(-90 18 {_f(top + ph / 2)})">{escape(ylabel)}</text>'
    )
    for i, (label, s) in enumerate(series.items()):
        colour = COLOURS[i % len(COLOURS)]
        good = [(x, y) for x, y in s if keep(y)]
        if good:
            path = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in good)
            out.append(f'<polyline points="{path}" fill="none" stroke="{colour}" stroke-width="2"/>')
            for x, y in good:
                out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3" fill="{colour}"/>')
        ly = top + 10 + 20 * i
        out.append(f'<line x1="{left + pw + 15}" x2="{left + pw + 40}" y1="{ly}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 46}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


METHOD_LABELS = {"sdp": "SDP+O", "sdp+ml": "SDP+O+ML"}


def campaign_plots(rows: list[dict], out_dir, metric: str = "median_pos_err") -> list[Path]:
    """One chart per azimuth noise level; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ylabel = "median reconstruction error (relative)" if metric == "median_pos_err" else "median rotation error (deg)"
    paths = []
    for sigma in sorted({r["sigma_az_deg"] for r in rows}):
        sub = [r for r in rows if r["sigma_az_deg"] == sigma]
        series: dict[str, list[tuple[float, float]]] = {}
        for r in sub:
            series.setdefault(METHOD_LABELS.get(r["method"], r["method"]), []).append((r["K"], r[metric]))
        for s in series.values():
            s.sort()
        sig_el = sub[0]["sigma_el_deg"]
        svg = line_chart(series, f"azimuth noise {sigma:g} deg, elevation noise {sig_el:g} deg", "number of DOA measurements K", ylabel)
        path = out_dir / f"{metric}_sigma_{sigma:g}.svg"
        path.write_text(svg)
        paths.append(path)
    return paths
