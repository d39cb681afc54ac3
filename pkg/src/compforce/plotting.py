"""Static SVG charts for run and comparison CSVs.

No plotting library involved: the output is hand-built SVG so figures are
small, diffable and need nothing beyond the standard library to produce.
"""

from __future__ import annotations

import csv
from xml.sax.saxutils import escape

import numpy as np

from .harness import read_run_csv

KINDS = ("output-vs-target", "weight-norm", "weight-elements", "node-activity", "mse-bar")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

WIDTH, HEIGHT = 720, 360
MARGIN = dict(left=70, right=150, top=40, bottom=50)


class PlotError(ValueError):
    pass


class MissingColumnError(PlotError):
    def __init__(self, column: str, path):
        super().__init__(f"column {column!r} not found in {path}")
        self.column = column


def _nice(v: float) -> str:
    return f"{v:.4g}"


def _frame(title: str, xlabel: str, ylabel: str, x0, x1, y0, y1) -> list[str]:
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(L + R) / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{L}" y1="{B}" x2="{R}" y2="{B}" stroke="black"/>',
        f'<line x1="{L}" y1="{T}" x2="{L}" y2="{B}" stroke="black"/>',
        f'<text x="{(L + R) / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{(T + B) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(T + B) / 2})">{escape(ylabel)}</text>',
    ]
    for i in range(5):
        fx = i / 4
        xv = x0 + fx * (x1 - x0)
        yv = y0 + fx * (y1 - y0)
        px = L + fx * (R - L)
        py = B - fx * (B - T)
        if x0 is not None and x1 != x0:
            out.append(f'<text x="{px:.1f}" y="{B + 16}" text-anchor="middle">{_nice(xv)}</text>')
        out.append(f'<line x1="{L - 4}" y1="{py:.1f}" x2="{L}" y2="{py:.1f}" stroke="black"/>')
        out.append(f'<text x="{L - 6}" y="{py + 4:.1f}" text-anchor="end">{_nice(yv)}</text>')
    return out


def _limits(arrs):
    vals = np.concatenate([a[np.isfinite(a)] for a in arrs]) if arrs else np.array([])
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(x: np.ndarray, series: dict[str, np.ndarray], title: str, xlabel: str,
               ylabel: str) -> str:
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]
    x = np.asarray(x, dtype=np.float64)
    x0, x1 = (float(x[0]), float(x[-1])) if x.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    y0, y1 = _limits(list(series.values()))
    out = _frame(title, xlabel, ylabel, x0, x1, y0, y1)
    for i, (label, y) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        px = L + (x - x0) / (x1 - x0) * (R - L)
        py = B - (np.asarray(y) - y0) / (y1 - y0) * (B - T)
        ok = np.isfinite(py)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px[ok], py[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        ly = T + 14 * i
        out.append(f'<line x1="{R + 10}" y1="{ly}" x2="{R + 30}" y2="{ly}" stroke="{color}"/>')
        out.append(f'<text x="{R + 34}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(groups: list[str], series: dict[str, list[float]], title: str,
              ylabel: str) -> str:
    """Grouped bars: one group per entry of ``groups``, one bar per series."""
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]
    vals = np.array([v for vs in series.values() for v in vs], dtype=np.float64)
    top = float(np.nanmax(vals)) * 1.1 if vals.size and np.nanmax(vals) > 0 else 1.0
    out = _frame(title, "", ylabel, 0, 0, 0.0, top)
    slot = (R - L) / max(len(groups), 1)
    bw = 0.8 * slot / max(len(series), 1)
    for gi, g in enumerate(groups):
        gx = L + gi * slot + 0.1 * slot
        out.append(f'<text x="{L + (gi + 0.5) * slot:.1f}" y="{B + 16}" '
                   f'text-anchor="middle">{escape(g)}</text>')
        for si, (label, vs) in enumerate(series.items()):
            v = vs[gi]
            if not np.isfinite(v):
                continue
            h = v / top * (B - T)
            out.append(f'<rect x="{gx + si * bw:.1f}" y="{B - h:.1f}" width="{bw:.1f}" '
                       f'height="{h:.1f}" fill="{PALETTE[si % len(PALETTE)]}">'
                       f'<title>{escape(label)} {escape(g)}: {_nice(v)}</title></rect>')
    for si, label in enumerate(series):
        ly = T + 14 * si
        out.append(f'<rect x="{R + 10}" y="{ly - 6}" width="20" height="10" '
                   f'fill="{PALETTE[si % len(PALETTE)]}"/>')
        out.append(f'<text x="{R + 34}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _require(data: dict, cols, path):
    for c in cols:
        if c not in data:
            raise MissingColumnError(c, path)


def _window(n: int, window):
    if window is None:
        return 0, n
    start, end = window
    if not (0 <= start < end <= n):
        raise PlotError(f"window ({start}, {end}) outside trace bounds [0, {n}]")
    return start, end


def render(kind: str, csv_path, window: tuple[int, int] | None = None) -> str:
    """SVG text for one of ``KINDS`` drawn from ``csv_path``."""
    if kind not in KINDS:
        raise PlotError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    if kind == "mse-bar":
        return _render_mse_bar(csv_path)
    data = read_run_csv(csv_path)
    _require(data, ["step"], csv_path)
    lo, hi = _window(data["step"].size, window)
    x = data["step"][lo:hi]
    if kind == "output-vs-target":
        _require(data, ["f", "z"], csv_path)
        series = {"target f": data["f"][lo:hi], "output z": data["z"][lo:hi]}
        return line_chart(x, series, "Output vs target", "step k", "value")
    if kind == "weight-norm":
        _require(data, ["w_norm"], csv_path)
        return line_chart(x, {"||W_out||": data["w_norm"][lo:hi]}, "Readout weight norm",
                          "step k", "||W_out||")
    if kind == "weight-elements":
        cols = sorted((c for c in data if c.startswith("w_") and c[2:].isdigit()),
                      key=lambda c: int(c[2:]))
        if not cols:
            raise MissingColumnError("w_0", csv_path)
        return line_chart(x, {c: data[c][lo:hi] for c in cols}, "Readout weight elements",
                          "step k", "weight")
    cols = sorted((c for c in data if c.startswith("node_")), key=lambda c: int(c[5:]))
    if not cols:
        raise MissingColumnError("node_0", csv_path)
    return line_chart(x, {c: data[c][lo:hi] for c in cols}, "Reservoir node activity",
                      "step k", "activation r")


def _render_mse_bar(csv_path) -> str:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotError(f"{csv_path} has no rows")
    for c in ("method", "train_mse", "predict_mse"):
        if c not in rows[0]:
            raise MissingColumnError(c, csv_path)
    methods = [r["method"] for r in rows]
    series = {
        "training MSE": [float(r["train_mse"] or "nan") for r in rows],
        "prediction MSE": [float(r["predict_mse"] or "nan") for r in rows],
    }
    return bar_chart(methods, series, "MSE by learning method (median)", "MSE")


def cmd_plot(kind: str, csv_path, out_path, window=None) -> None:
    svg = render(kind, csv_path, window)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
