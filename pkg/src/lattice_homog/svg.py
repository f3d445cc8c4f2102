"""Minimal SVG output: log-log scatter with fit line and box-plot panels."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .analysis import slope_fit

W, H = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 50, 60
PALETTE = ("#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e")


class Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, footer: str = ""):
        self.items: list[str] = []
        self.title, self.xlabel, self.ylabel, self.footer = title, xlabel, ylabel, footer

    def line(self, x1, y1, x2, y2, color="#000", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                          f'stroke="{color}" stroke-width="{width}"{d}/>')

    def rect(self, x, y, w, h, fill="none", stroke="#000"):
        self.items.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
                          f'fill="{fill}" stroke="{stroke}"/>')

    def circle(self, x, y, r=3.5, color="#000"):
        self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>')

    def text(self, x, y, s, size=12, anchor="middle", rotate=None):
        rot = f' transform="rotate({rotate} {x:.2f} {y:.2f})"' if rotate else ""
        self.items.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" font-family="sans-serif" '
                          f'text-anchor="{anchor}"{rot}>{escape(s)}</text>')

    def render(self) -> str:
        head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
                f'<rect width="{W}" height="{H}" fill="#fff"/>']
        self.text(W / 2, 28, self.title, size=15)
        self.text(LEFT + (W - LEFT - RIGHT) / 2, H - 18, self.xlabel)
        self.text(22, TOP + (H - TOP - BOTTOM) / 2, self.ylabel, rotate=-90)
        if self.footer:
            self.text(W - 6, H - 4, self.footer, size=9, anchor="end")
        return "\n".join(head + self.items + ["</svg>\n"])


class Axis:
    """Maps data to pixels; ``log`` axes work in log10."""

    def __init__(self, lo, hi, p0, p1, log=False):
        self.log = log
        f = math.log10 if log else float
        lo, hi = f(lo), f(hi)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.06 * (hi - lo)
        self.lo, self.hi, self.p0, self.p1 = lo - pad, hi + pad, p0, p1

    def __call__(self, v):
        v = math.log10(v) if self.log else v
        return self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)

    def ticks(self):
        if self.log:
            out = []
            for e in range(math.floor(self.lo), math.ceil(self.hi) + 1):
                for m in (1, 2, 5):
                    v = m * 10.0**e
                    if self.lo <= math.log10(v) <= self.hi:
                        out.append(v)
            return out
        return list(np.linspace(self.lo, self.hi, 6)[1:-1])


def _frame(c: Canvas, xa: Axis, ya: Axis, xticks=None):
    x0, x1, y0, y1 = LEFT, W - RIGHT, H - BOTTOM, TOP
    c.rect(x0, y1, x1 - x0, y0 - y1)
    for v in (xa.ticks() if xticks is None else []):
        x = xa(v)
        c.line(x, y0, x, y0 + 5)
        c.text(x, y0 + 18, f"{v:.3g}", size=10)
    for v in ya.ticks():
        y = ya(v)
        c.line(x0 - 5, y, x0, y)
        c.text(x0 - 8, y + 4, f"{v:.3g}", size=10, anchor="end")


def _write(path: Path, svg: str) -> Path:
    try:
        path.write_text(svg)
    except OSError as exc:
        raise OSError(f"could not write plot {path}: {exc}") from exc
    return path


def loglog_scatter(path, series: dict, title: str, xlabel: str, ylabel: str, fit: bool = True,
                   footer: str = "") -> Path:
    """``series`` maps a label to (xs, ys); each gets points and, optionally, a fitted line."""
    xs_all = np.concatenate([np.asarray(v[0], float) for v in series.values()])
    ys_all = np.concatenate([np.asarray(v[1], float) for v in series.values()])
    c = Canvas(title, xlabel, ylabel, footer)
    xa = Axis(xs_all.min(), xs_all.max(), LEFT, W - RIGHT, log=True)
    ya = Axis(ys_all.min(), ys_all.max(), H - BOTTOM, TOP, log=True)
    _frame(c, xa, ya)
    for i, (label, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        for x, y in zip(xs, ys):
            c.circle(xa(x), ya(y), color=color)
        note = label
        if fit and len(xs) >= 3:
            f = slope_fit(xs, ys)
            lo, hi = min(xs), max(xs)
            c.line(xa(lo), ya(math.exp(f.intercept) * lo**f.slope),
                   xa(hi), ya(math.exp(f.intercept) * hi**f.slope), color=color, width=1.5)
            note = f"{label} slope {f.slope:.3f} (r2 {f.r_squared:.3f})"
        c.text(LEFT + 12, TOP + 18 + 16 * i, note, size=11, anchor="start")
    return _write(Path(path), c.render())


def boxplot(path, groups: list, title: str, xlabel: str, ylabel: str, reference: float | None = None,
            footer: str = "", log_y: bool = False) -> Path:
    """``groups`` is a list of (label, values); one box (quartiles, 1.5 IQR whiskers) each."""
    if not groups:
        raise ValueError("boxplot needs at least one group")
    vals = np.concatenate([np.asarray(v, float) for _, v in groups])
    lo, hi = vals.min(), vals.max()
    if reference is not None:
        lo, hi = min(lo, reference), max(hi, reference)
    c = Canvas(title, xlabel, ylabel, footer)
    xa = Axis(0, len(groups) + 1, LEFT, W - RIGHT)
    ya = Axis(lo, hi, H - BOTTOM, TOP, log=log_y)
    _frame(c, xa, ya, xticks=[])
    half = 0.3 * (xa(1) - xa(0))
    for i, (label, v) in enumerate(groups, start=1):
        v = np.sort(np.asarray(v, float))
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        iqr = q3 - q1
        inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
        x = xa(i)
        c.line(x, ya(inside.min()), x, ya(q1))
        c.line(x, ya(q3), x, ya(inside.max()))
        c.rect(x - half, ya(q3), 2 * half, max(ya(q1) - ya(q3), 0.5), fill="#d6e4f0", stroke=PALETTE[0])
        c.line(x - half, ya(med), x + half, ya(med), color=PALETTE[1], width=2)
        for o in v[(v < q1 - 1.5 * iqr) | (v > q3 + 1.5 * iqr)]:
            c.circle(x, ya(o), r=2.5)
        c.text(x, H - BOTTOM + 18, label, size=10)
    if reference is not None:
        y = ya(reference)
        c.line(LEFT, y, W - RIGHT, y, color=PALETTE[2], width=1.5, dash="6,4")
        c.text(W - RIGHT - 4, y - 5, f"reference {reference:.4g}", size=10, anchor="end")
    return _write(Path(path), c.render())
