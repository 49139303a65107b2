"""Minimal self-contained SVG 1.1 line and box plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, width, height):
        self.width, self.height = width, height
        self.items: list[str] = []

    def add(self, s: str):
        self.items.append(s)

    def text(self, x, y, s, size=12, anchor="middle", rotate=None):
        tr = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" font-family="sans-serif" '
                 f'text-anchor="{anchor}"{tr}>{escape(s)}</text>')

    def line(self, x1, y1, x2, y2, color="#000", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                 f'stroke="{color}" stroke-width="{width}"{d}/>')

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n')
        return head + "\n".join(self.items) + "\n</svg>\n"


class _Axes:
    def __init__(self, canvas, x0, y0, w, h, xlim, ylim):
        self.c, self.x0, self.y0, self.w, self.h = canvas, x0, y0, w, h
        self.xlim, self.ylim = xlim, ylim

    def px(self, x):
        return self.x0 + (x - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * self.w

    def py(self, y):
        return self.y0 + self.h - (y - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * self.h

    def frame(self, xlabel, ylabel, title, xticks=None, yticks=None):
        c = self.c
        c.add(f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.w)}" height="{_f(self.h)}" '
              f'fill="none" stroke="#000"/>')
        for t in yticks or ():
            c.line(self.x0 - 4, self.py(t), self.x0, self.py(t))
            c.text(self.x0 - 6, self.py(t) + 4, f"{t:g}", 10, "end")
        for t in xticks or ():
            c.line(self.px(t), self.y0 + self.h, self.px(t), self.y0 + self.h + 4)
            c.text(self.px(t), self.y0 + self.h + 16, f"{t:g}", 10)
        c.text(self.x0 + self.w / 2, self.y0 + self.h + 32, xlabel)
        c.text(self.x0 - 38, self.y0 + self.h / 2, ylabel, rotate=-90)
        c.text(self.x0 + self.w / 2, self.y0 - 10, title, 13)


def roc_svg(curves: dict, title: str = "ROC") -> str:
    """Overlay of ROC curves; ``curves`` maps name -> (fpr, tpr)."""
    c = _Canvas(520, 440)
    ax = _Axes(c, 60, 40, 340, 340, (0, 1), (0, 1))
    ticks = [0, 0.2, 0.4, 0.6, 0.8, 1.0]
    ax.frame("false positive rate", "true positive rate", title, ticks, ticks)
    c.line(ax.px(0), ax.py(0), ax.px(1), ax.py(1), "#999", 1, "4,3")
    for i, (name, (fpr, tpr)) in enumerate(curves.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_f(ax.px(x))},{_f(ax.py(y))}" for x, y in zip(fpr, tpr))
        c.add(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = 60 + 18 * i
        c.line(410, ly, 430, ly, color, 2)
        c.text(435, ly + 4, name, 11, "start")
    return c.render()


def box_svg(panels: dict, title: str = "") -> str:
    """Box-and-whisker panels; ``panels`` maps metric -> {name: FiveNumberSummary}."""
    n_panels = max(1, len(panels))
    pw, ph = 300, 300
    c = _Canvas(80 + n_panels * (pw + 70), ph + 120)
    if title:
        c.text(c.width / 2, 18, title, 14)
    for p, (metric, boxes) in enumerate(panels.items()):
        vals = [v for s in boxes.values() for v in (s.minimum, s.maximum)]
        lo, hi = min(vals), max(vals)
        pad = max(0.02, 0.1 * (hi - lo))
        lo, hi = max(0.0, lo - pad), min(1.0, hi + pad)
        if hi <= lo:
            lo, hi = lo - 0.05, hi + 0.05
        ax = _Axes(c, 70 + p * (pw + 70), 50, pw, ph, (0, len(boxes)), (lo, hi))
        step = (hi - lo) / 5
        ax.frame("", metric, metric, None, [round(lo + k * step, 3) for k in range(6)])
        for i, (name, s) in enumerate(boxes.items()):
            color = PALETTE[i % len(PALETTE)]
            xc = ax.px(i + 0.5)
            half = 0.3 * pw / len(boxes)
            c.line(xc, ax.py(s.whisker_low), xc, ax.py(s.q1), color)
            c.line(xc, ax.py(s.q3), xc, ax.py(s.whisker_high), color)
            c.line(xc - half / 2, ax.py(s.whisker_low), xc + half / 2, ax.py(s.whisker_low), color)
            c.line(xc - half / 2, ax.py(s.whisker_high), xc + half / 2, ax.py(s.whisker_high), color)
            top, bottom = ax.py(s.q3), ax.py(s.q1)
            c.add(f'<rect x="{_f(xc - half)}" y="{_f(top)}" width="{_f(2 * half)}" '
                  f'height="{_f(max(bottom - top, 0.5))}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>')
            c.line(xc - half, ax.py(s.median), xc + half, ax.py(s.median), color, 2)
            for o in s.outliers:
                c.add(f'<circle cx="{_f(xc)}" cy="{_f(ax.py(o))}" r="3" fill="none" stroke="{color}"/>')
            c.text(xc, ax.y0 + ph + 16, name, 10)
    return c.render()
