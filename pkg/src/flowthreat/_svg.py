"""Minimal self-contained SVG charts.  Each chart embeds its data as JSON in a
``<desc>`` element so the numbers survive alongside the drawing."""

from __future__ import annotations

import json
from xml.sax.saxutils import escape

W, H = 640, 400
M = {"left": 70, "right": 20, "top": 40, "bottom": 50}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if abs(v) < 1e6 else f"{v:.3g}"


def _doc(title: str, data, body: list[str], width=W, height=H) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f"<title>{escape(title)}</title>",
        f"<desc>{escape(json.dumps(data, sort_keys=True))}</desc>",
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _axes(x0, y0, x1, y1, ymin, ymax, xlabel, ylabel, ticks=5) -> list[str]:
    out = [
        f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{y1 + 38}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="18" y="{(y0 + y1) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2})">{escape(ylabel)}</text>',
    ]
    for i in range(ticks + 1):
        v = ymin + (ymax - ymin) * i / ticks
        y = y1 - (y1 - y0) * i / ticks
        out.append(f'<line x1="{x0 - 4}" y1="{y:.2f}" x2="{x0}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
    return out


def line_chart(title, series: dict[str, list[float]], xlabel, ylabel, x=None, ymin=None, ymax=None) -> str:
    """One polyline per named series against a shared x."""
    n = max((len(v) for v in series.values()), default=0)
    xs = list(x) if x is not None else list(range(1, n + 1))
    vals = [v for s in series.values() for v in s if v == v]
    lo = min(vals) if ymin is None else ymin
    hi = max(vals) if ymax is None else ymax
    if hi <= lo:
        hi = lo + 1.0
    x0, y0 = M["left"], M["top"]
    x1, y1 = W - M["right"], H - M["bottom"]
    xlo, xhi = (min(xs), max(xs)) if xs else (0, 1)
    if xhi <= xlo:
        xhi = xlo + 1

    def px(v):
        return x0 + (x1 - x0) * (v - xlo) / (xhi - xlo)

    def py(v):
        return y1 - (y1 - y0) * (v - lo) / (hi - lo)

    body = _axes(x0, y0, x1, y1, lo, hi, xlabel, ylabel)
    for i, xv in enumerate(xs):
        if len(xs) <= 30 or i % max(1, len(xs) // 10) == 0:
            body.append(f'<text x="{px(xv):.2f}" y="{y1 + 16}" text-anchor="middle">{_fmt(xv)}</text>')
    for k, (name, values) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(xv):.2f},{py(v):.2f}" for xv, v in zip(xs, values) if v == v)
        body.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        body.append(f'<text x="{x1 - 120}" y="{y0 + 14 + 14 * k}" fill="{color}">{escape(name)}</text>')
    data = {"x": xs, "series": series}
    return _doc(title, data, body)


def bar_chart(title, labels: list[str], values: list[float], ylabel) -> str:
    """Horizontal bars, one per label, largest first as given."""
    n = len(labels)
    height = max(H, M["top"] + M["bottom"] + 18 * n)
    x0, x1 = 170, W - M["right"] - 60
    hi = max(values, default=0.0) or 1.0
    body = [f'<text x="{(x0 + x1) / 2}" y="{height - 12}" text-anchor="middle">{escape(ylabel)}</text>']
    for i, (lab, v) in enumerate(zip(labels, values)):
        y = M["top"] + 18 * i
        w = (x1 - x0) * v / hi
        body.append(f'<text x="{x0 - 6}" y="{y + 12}" text-anchor="end">{escape(lab)}</text>')
        body.append(f'<rect x="{x0}" y="{y}" width="{w:.2f}" height="14" fill="{PALETTE[0]}">'
                    f"<title>{escape(lab)}: {v!r}</title></rect>")
        body.append(f'<text x="{x0 + w + 4:.2f}" y="{y + 12}">{v:.4f}</text>')
    data = {"labels": labels, "values": values}
    return _doc(title, data, body, height=height)


def heat_grid(title, grid: list[list[int]], row_labels, col_labels) -> str:
    """Count matrix as shaded cells with the count written in each cell."""
    k = len(grid)
    cell = min(80, (min(W, H) - 140) // max(k, 1))
    x0, y0 = 150, 70
    peak = max((v for row in grid for v in row), default=0) or 1
    body = [
        f'<text x="{x0 + cell * k / 2}" y="{y0 - 28}" text-anchor="middle">predicted</text>',
        f'<text x="20" y="{y0 + cell * k / 2}" text-anchor="middle" '
        f'transform="rotate(-90 20 {y0 + cell * k / 2})">truth</text>',
    ]
    for j, lab in enumerate(col_labels):
        body.append(f'<text x="{x0 + cell * j + cell / 2}" y="{y0 - 8}" text-anchor="middle">{escape(str(lab))}</text>')
    for i, row in enumerate(grid):
        body.append(f'<text x="{x0 - 6}" y="{y0 + cell * i + cell / 2 + 4}" text-anchor="end">'
                    f"{escape(str(row_labels[i]))}</text>")
        for j, v in enumerate(row):
            shade = int(235 - 190 * v / peak)
            fill = f"rgb({shade},{shade},255)"
            ink = "white" if shade < 120 else "black"
            body.append(f'<rect x="{x0 + cell * j}" y="{y0 + cell * i}" width="{cell}" height="{cell}" '
                        f'fill="{fill}" stroke="white"/>')
            body.append(f'<text x="{x0 + cell * j + cell / 2}" y="{y0 + cell * i + cell / 2 + 4}" '
                        f'text-anchor="middle" fill="{ink}">{v}</text>')
    height = max(H, y0 + cell * k + 40)
    data = {"grid": grid, "rows": list(map(str, row_labels)), "cols": list(map(str, col_labels))}
    return _doc(title, data, body, height=height)
