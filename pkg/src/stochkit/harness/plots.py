"""Static SVG figures written with xml.etree (no plotting dependency).

All plots put grad_calc_count on the x-axis.  Cost and optimality-gap
plots use a log y-axis; values <= 0 (an optimality gap that rounds below
zero) are clamped to ``LOG_FLOOR``.
"""

from __future__ import annotations

import math
import warnings
import xml.etree.ElementTree as ET

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 150, "top": 40, "bottom": 50}
LOG_FLOOR = 1e-16
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")
SVG_NS = "http://www.w3.org/2000/svg"


class UnsupportedDimensionError(ValueError):
    pass


def _svg(title):
    ET.register_namespace("", SVG_NS)
    root = ET.Element("svg", {"xmlns": SVG_NS, "width": str(WIDTH), "height": str(HEIGHT),
                              "viewBox": f"0 0 {WIDTH} {HEIGHT}", "font-family": "sans-serif"})
    ET.SubElement(root, "rect", {"x": "0", "y": "0", "width": str(WIDTH), "height": str(HEIGHT), "fill": "white"})
    t = ET.SubElement(root, "text", {"x": str(WIDTH // 2), "y": "22", "text-anchor": "middle", "font-size": "15"})
    t.text = title
    return root


def _text(parent, x, y, s, size=11, anchor="middle", **attrs):
    el = ET.SubElement(parent, "text", {"x": f"{x:.1f}", "y": f"{y:.1f}", "text-anchor": anchor,
                                        "font-size": str(size), **attrs})
    el.text = s
    return el


class _Axes:
    """Maps data coordinates to the plot rectangle; log scale on y when asked."""

    def __init__(self, xlim, ylim, logy=False):
        self.x0, self.x1 = xlim
        self.logy = logy
        if logy:
            ylim = (math.log10(ylim[0]), math.log10(ylim[1]))
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.left, self.top = MARGIN["left"], MARGIN["top"]
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        v = math.log10(y) if self.logy else y
        return self.top + (1 - (v - self.y0) / (self.y1 - self.y0)) * self.h


def _nice_ticks(lo, hi, count=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * span:
        ticks.append(t)
        t += step
    return ticks


def _frame(root, ax, xlabel, ylabel):
    g = ET.SubElement(root, "g", {"stroke": "black", "fill": "none"})
    ET.SubElement(g, "rect", {"x": str(ax.left), "y": str(ax.top), "width": str(ax.w), "height": str(ax.h)})
    for t in _nice_ticks(ax.x0, ax.x1):
        x = ax.px(t)
        ET.SubElement(g, "line", {"x1": f"{x:.1f}", "y1": str(ax.top + ax.h), "x2": f"{x:.1f}",
                                  "y2": str(ax.top + ax.h + 5)})
        _text(root, x, ax.top + ax.h + 18, f"{t:g}", size=10)
    if ax.logy:
        decades = range(math.ceil(ax.y0), math.floor(ax.y1) + 1)
        step = max(1, len(decades) // 8)
        yticks = [(10.0 ** k, f"1e{k}") for k in list(decades)[::step]]
    else:
        yticks = [(t, f"{t:g}") for t in _nice_ticks(ax.y0, ax.y1)]
    for value, label in yticks:
        y = ax.py(value)
        ET.SubElement(g, "line", {"x1": str(ax.left - 5), "y1": f"{y:.1f}", "x2": str(ax.left), "y2": f"{y:.1f}"})
        _text(root, ax.left - 8, y + 4, label, size=10, anchor="end")
    _text(root, ax.left + ax.w / 2, HEIGHT - 12, xlabel, size=12)
    _text(root, 16, ax.top + ax.h / 2, ylabel, size=12, transform=f"rotate(-90 16 {ax.top + ax.h / 2:.1f})")


def _legend(root, names, colors, marker="line"):
    x = WIDTH - MARGIN["right"] + 12
    g = ET.SubElement(root, "g", {"class": "legend"})
    for k, (name, color) in enumerate(zip(names, colors)):
        y = MARGIN["top"] + 14 + 18 * k
        if marker == "line":
            ET.SubElement(g, "line", {"x1": str(x), "y1": str(y - 4), "x2": str(x + 20), "y2": str(y - 4),
                                      "stroke": color, "stroke-width": "2"})
        else:
            ET.SubElement(g, "circle", {"cx": str(x + 10), "cy": str(y - 4), "r": "4", "fill": color})
        _text(g, x + 26, y, name, size=11, anchor="start")


def write_svg(root, path):
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


def line_plot(series, title, xlabel, ylabel, logy=True):
    """``series`` maps a legend name to ``(x, y)`` arrays; returns the SVG root."""
    if not series:
        raise ValueError("nothing to plot")
    xs = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()])
    finite = np.isfinite(ys)
    if logy:
        ys = np.maximum(ys, LOG_FLOOR)
    ylo, yhi = ys[finite].min(), ys[finite].max()
    if logy:
        ylim = (10 ** math.floor(math.log10(ylo)), 10 ** math.ceil(math.log10(yhi)))
    else:
        pad = 0.05 * (yhi - ylo or 1.0)
        ylim = (ylo - pad, yhi + pad)
    ax = _Axes((float(xs.min()), float(xs.max())), ylim, logy)
    root = _svg(title)
    _frame(root, ax, xlabel, ylabel)
    colors = [PALETTE[k % len(PALETTE)] for k in range(len(series))]
    for (name, (x, y)), color in zip(series.items(), colors):
        y = np.asarray(y, dtype=float)
        if logy:
            y = np.maximum(y, LOG_FLOOR)
        pts = " ".join(f"{ax.px(a):.2f},{ax.py(b):.2f}" for a, b in zip(x, y) if np.isfinite(b))
        ET.SubElement(root, "polyline", {"points": pts, "fill": "none", "stroke": color, "stroke-width": "1.6",
                                         "class": "series", "data-name": name})
    _legend(root, list(series), colors)
    return root


def plot_cost(records, path):
    """Cost against grad_calc_count, one series per named record."""
    series = {name: (rec.grad_calc_count, rec.cost) for name, rec in records.items()}
    write_svg(line_plot(series, "Cost function value", "# of gradient evaluations", "cost"), path)
    return path


def plot_optgap(records, path):
    """Optimality gap plot; skipped with a warning (returns None) when no record has a finite gap."""
    series = {name: (rec.grad_calc_count, rec.optgap) for name, rec in records.items()
              if np.isfinite(rec.optgap).any()}
    if not series:
        warnings.warn("optimality gap unavailable (no f_opt); optgap plot skipped", stacklevel=2)
        return None
    write_svg(line_plot(series, "Optimality gap", "# of gradient evaluations", "f(w) - f(w*)"), path)
    return path


def plot_classification(X, y_true, y_pred, path, title="Classification result"):
    """Scatter of the first two features: fill = predicted class, ring = true class."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] not in (2, 3):
        raise UnsupportedDimensionError(f"classification scatter needs 2 or 3 features, got {X.shape[-1]}")
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = list(np.unique(np.concatenate([y_true, y_pred])))
    color = {c: PALETTE[k % len(PALETTE)] for k, c in enumerate(classes)}
    pad = 0.05 * (np.ptp(X[:, 1]) or 1.0)
    ax = _Axes((X[:, 0].min() - pad, X[:, 0].max() + pad), (X[:, 1].min() - pad, X[:, 1].max() + pad))
    root = _svg(title)
    _frame(root, ax, "x1", "x2")
    for (a, b), t, p in zip(X[:, :2], y_true, y_pred):
        ET.SubElement(root, "circle", {"cx": f"{ax.px(a):.2f}", "cy": f"{ax.py(b):.2f}", "r": "4",
                                       "fill": color[p], "stroke": color[t], "stroke-width": "2",
                                       "class": "hit" if t == p else "miss"})
    accuracy = float(np.mean(y_true == y_pred))
    _text(root, ax.left + ax.w / 2, ax.top - 4, f"accuracy {accuracy:.3f}", size=11)
    _legend(root, [f"class {c:g}" for c in classes], [color[c] for c in classes], marker="dot")
    write_svg(root, path)
    return path


def _band_color(level):
    # light yellow (low cost) to dark blue (high cost)
    lo, hi = np.array([255, 247, 188]), np.array([37, 52, 148])
    r, g, b = (lo + (hi - lo) * level).astype(int)
    return f"#{r:02x}{g:02x}{b:02x}"


def plot_trajectory(problem, records, path, grid=40, bands=12):
    """Iterate paths (from ``w_hist``) over filled cost level bands; d must be 2."""
    if problem.d != 2:
        raise UnsupportedDimensionError(f"trajectory plot needs d = 2, problem has d = {problem.d}")
    paths = {name: np.asarray(rec.w_hist) for name, rec in records.items() if rec.w_hist}
    if not paths:
        raise ValueError("trajectory plot needs records with w_hist (store_w=True)")
    pts = np.concatenate(list(paths.values()))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.1 * np.maximum(hi - lo, 1e-3)
    lo, hi = lo - pad, hi + pad
    gx = np.linspace(lo[0], hi[0], grid + 1)
    gy = np.linspace(lo[1], hi[1], grid + 1)
    cx, cy = 0.5 * (gx[1:] + gx[:-1]), 0.5 * (gy[1:] + gy[:-1])
    F = np.array([[problem.cost(np.array([a, b])) for a in cx] for b in cy])
    G = np.log10(F - F.min() + 1e-12 * max(1.0, abs(F.min())))
    edges = np.linspace(G.min(), G.max(), bands + 1)
    level = np.clip(np.searchsorted(edges, G, side="right") - 1, 0, bands - 1) / max(bands - 1, 1)
    ax = _Axes((lo[0], hi[0]), (lo[1], hi[1]))
    root = _svg("Iterate trajectories")
    g = ET.SubElement(root, "g", {"class": "levels", "stroke": "none"})
    for j in range(grid):
        for i in range(grid):
            x, y = ax.px(gx[i]), ax.py(gy[j + 1])
            ET.SubElement(g, "rect", {"x": f"{x:.2f}", "y": f"{y:.2f}", "width": f"{ax.w / grid + 0.3:.2f}",
                                      "height": f"{ax.h / grid + 0.3:.2f}", "fill": _band_color(level[j, i])})
    _frame(root, ax, "w1", "w2")
    colors = [PALETTE[(k + 1) % len(PALETTE)] for k in range(len(paths))]
    for (name, W), color in zip(paths.items(), colors):
        pl = " ".join(f"{ax.px(a):.2f},{ax.py(b):.2f}" for a, b in W)
        ET.SubElement(root, "polyline", {"points": pl, "fill": "none", "stroke": color, "stroke-width": "1.8",
                                         "class": "series", "data-name": name})
        ET.SubElement(root, "circle", {"cx": f"{ax.px(W[-1, 0]):.2f}", "cy": f"{ax.py(W[-1, 1]):.2f}", "r": "3",
                                       "fill": color})
    _legend(root, list(paths), colors)
    write_svg(root, path)
    return path
