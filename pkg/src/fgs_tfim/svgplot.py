"""Dependency-free SVG line plots and heat maps for the command-line tools."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=110, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _fmt(v):
    return f"{v:.4g}"


class _Frame:
    def __init__(self, xr, yr, title, xlabel, ylabel):
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        ]
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def px(self, x):
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (1.0 - (y - self.y0) / (self.y1 - self.y0)) * self.ph

    def axes(self):
        l, t = MARGIN["left"], MARGIN["top"]
        p = self.parts
        p.append(f'<rect x="{l}" y="{t}" width="{self.pw}" height="{self.ph}" '
                 f'fill="none" stroke="black"/>')
        for x in _ticks(self.x0, self.x1):
            X = self.px(x)
            p.append(f'<line x1="{X:.1f}" y1="{t + self.ph}" x2="{X:.1f}" y2="{t + self.ph + 5}" stroke="black"/>')
            p.append(f'<text x="{X:.1f}" y="{t + self.ph + 18}" text-anchor="middle">{_fmt(x)}</text>')
        for y in _ticks(self.y0, self.y1):
            Y = self.py(y)
            p.append(f'<line x1="{l - 5}" y1="{Y:.1f}" x2="{l}" y2="{Y:.1f}" stroke="black"/>')
            p.append(f'<text x="{l - 8}" y="{Y + 4:.1f}" text-anchor="end">{_fmt(y)}</text>')
        p.append(f'<text x="{l + self.pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        p.append(f'<text x="18" y="{t + self.ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {t + self.ph / 2})">{escape(self.ylabel)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_plot(series, title="", xlabel="x", ylabel="y") -> str:
    """``series``: list of dicts with ``x``, ``y``, optional ``label``,
    ``markers`` (bool) and ``line`` (bool, default True)."""
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], float) for s in series])
    pad = 0.05 * (ys.max() - ys.min() or 1.0)
    f = _Frame((xs.min(), xs.max()), (ys.min() - pad, ys.max() + pad), title, xlabel, ylabel)
    f.axes()
    for k, s in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = [(f.px(x), f.py(y)) for x, y in zip(s["x"], s["y"])]
        if s.get("line", True) and len(pts) > 1:
            d = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
            f.parts.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if s.get("markers", False):
            for x, y in pts:
                f.parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
        if s.get("label"):
            ly = MARGIN["top"] + 14 + 16 * k
            lx = WIDTH - MARGIN["right"] + 10
            f.parts.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
            f.parts.append(f'<text x="{lx + 14}" y="{ly}">{escape(str(s["label"]))}</text>')
    return f.render()


def _viridis_like(t):
    # piecewise-linear blue -> green -> yellow ramp
    stops = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]])
    t = min(max(float(t), 0.0), 1.0) * (len(stops) - 1)
    i = min(int(t), len(stops) - 2)
    c = stops[i] + (t - i) * (stops[i + 1] - stops[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def heatmap(x, y, Z, title="", xlabel="x", ylabel="y", markers=()) -> str:
    """Cell plot of ``Z[i, j]`` at ``(x[j], y[i])``; ``markers`` are (x, y) squares."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    Z = np.asarray(Z, float)

    def edges(v):
        if v.size == 1:
            return np.array([v[0] - 0.5, v[0] + 0.5])
        mid = 0.5 * (v[1:] + v[:-1])
        return np.concatenate([[2 * v[0] - mid[0]], mid, [2 * v[-1] - mid[-1]]])

    xe, ye = edges(x), edges(y)
    f = _Frame((xe[0], xe[-1]), (ye[0], ye[-1]), title, xlabel, ylabel)
    finite = Z[np.isfinite(Z)]
    zlo, zhi = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    span = zhi - zlo or 1.0
    for i in range(y.size):
        for j in range(x.size):
            if not np.isfinite(Z[i, j]):
                continue
            X0, X1 = f.px(xe[j]), f.px(xe[j + 1])
            Y0, Y1 = f.py(ye[i + 1]), f.py(ye[i])
            f.parts.append(
                f'<rect x="{X0:.1f}" y="{Y0:.1f}" width="{X1 - X0 + 0.3:.1f}" height="{Y1 - Y0 + 0.3:.1f}" '
                f'fill="{_viridis_like((Z[i, j] - zlo) / span)}"/>'
            )
    for mx, my in markers:
        f.parts.append(f'<rect x="{f.px(mx) - 4:.1f}" y="{f.py(my) - 4:.1f}" width="8" height="8" '
                       f'fill="black"/>')
    f.axes()
    bx = WIDTH - MARGIN["right"] + 20
    for k in range(50):
        yk = MARGIN["top"] + f.ph * (1 - (k + 1) / 50)
        f.parts.append(f'<rect x="{bx}" y="{yk:.1f}" width="15" height="{f.ph / 50 + 0.5:.1f}" '
                       f'fill="{_viridis_like((k + 0.5) / 50)}"/>')
    f.parts.append(f'<text x="{bx + 20}" y="{MARGIN["top"] + 10}">{_fmt(zhi)}</text>')
    f.parts.append(f'<text x="{bx + 20}" y="{MARGIN["top"] + f.ph}">{_fmt(zlo)}</text>')
    return f.render()
