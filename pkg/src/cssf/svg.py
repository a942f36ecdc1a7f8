"""Minimal deterministic SVG line plots.

Each figure is a fixed 640x420 viewBox with a framed plot area, tick
labels at the data extremes, axis labels and one polyline per series.
Numbers are printed with a fixed number of decimals so identical input
gives byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .functionals import b_eval, f_lambda, h_eval

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _num(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.4g}"


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "",
              equal_aspect: bool = False) -> str:
    """Render ``[(label, xs, ys), ...]`` as an SVG document string."""
    series = [(lab, np.asarray(x, float), np.asarray(y, float)) for lab, x, y in series]
    series = [(lab, x, y) for lab, x, y in series if x.size]
    if not series:
        raise ValueError("nothing to plot: empty series")
    for lab, x, y in series:
        if x.shape != y.shape:
            raise ValueError(f"series {lab!r}: x and y lengths differ")
    finite = [np.isfinite(x) & np.isfinite(y) for _, x, y in series]
    xs = np.concatenate([x[m] for (_, x, _), m in zip(series, finite)])
    ys = np.concatenate([y[m] for (_, _, y), m in zip(series, finite)])
    if xs.size == 0:
        raise ValueError("nothing to plot: no finite points")
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B
    if equal_aspect:
        scale = min(pw / (x1 - x0), ph / (y1 - y0))
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        x0, x1 = cx - pw / (2 * scale), cx + pw / (2 * scale)
        y0, y1 = cy - ph / (2 * scale), cy + ph / (2 * scale)

    def px(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_T + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
           f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
           'fill="none" stroke="black"/>']
    if x0 < 0 < x1:
        out.append(f'<line x1="{_num(px(0))}" y1="{MARGIN_T}" x2="{_num(px(0))}" '
                   f'y2="{MARGIN_T + ph}" stroke="#bbb"/>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{MARGIN_L}" y1="{_num(py(0))}" x2="{MARGIN_L + pw}" '
                   f'y2="{_num(py(0))}" stroke="#bbb"/>')
    bottom = MARGIN_T + ph
    out += [
        f'<text x="{MARGIN_L}" y="{bottom + 16}" text-anchor="start">{_label(x0)}</text>',
        f'<text x="{MARGIN_L + pw}" y="{bottom + 16}" text-anchor="end">{_label(x1)}</text>',
        f'<text x="{MARGIN_L - 6}" y="{bottom}" text-anchor="end">{_label(y0)}</text>',
        f'<text x="{MARGIN_L - 6}" y="{MARGIN_T + 10}" text-anchor="end">{_label(y1)}</text>',
        f'<text x="{MARGIN_L + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{MARGIN_T + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2})">{escape(ylabel)}</text>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for k, ((lab, x, y), m) in enumerate(zip(series, finite)):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x[m], y[m]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_T + 16 + 16 * k
        out.append(f'<text x="{MARGIN_L + pw - 8}" y="{ly}" text-anchor="end" '
                   f'fill="{color}">{escape(lab)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(path, document: str) -> Path:
    path = Path(path)
    path.write_text(document)
    return path


def curves_svg(trajectory, plane: str = "xy") -> str:
    """Projection of every snapshot onto the ``xy`` or ``xz`` plane."""
    axes = {"xy": (0, 1), "xz": (0, 2)}
    if plane not in axes:
        raise ValueError("plane must be 'xy' or 'xz'")
    if len(trajectory) == 0:
        raise ValueError("nothing to plot: empty trajectory")
    i, j = axes[plane]
    key = "t" if trajectory.frame == "physical" else "tau"
    series = []
    for state in trajectory.states:
        p = np.vstack([state.positions, state.positions[:1]])
        series.append((f"{key}={state.time:.4g}", p[:, i], p[:, j]))
    if len(series) > len(COLORS):
        # keep the legend readable: first, last and evenly spaced ones between
        pick = np.unique(np.linspace(0, len(series) - 1, len(COLORS)).round().astype(int))
        series = [series[k] for k in pick]
    return line_plot(series, f"curve snapshots ({plane})", plane[0], plane[1], equal_aspect=True)


def series_svg(times, columns: dict, title: str = "", xlabel: str = "tau") -> str:
    """Time series plot; ``columns`` maps label to values aligned with ``times``."""
    if len(times) == 0:
        raise ValueError("nothing to plot: empty series")
    return line_plot([(k, times, v) for k, v in columns.items()], title, xlabel, "value")


def flambda_svg(lams=(0.5, 1.0, 2.0), n: int = 201) -> str:
    psi = np.linspace(-math.pi / 2, math.pi / 2, n)
    return line_plot([(f"lambda={lam:g}", psi, f_lambda(psi, lam)) for lam in lams],
                     "f_lambda", "psi", "f")


def h_svg(n: int = 201) -> str:
    psi = np.linspace(-math.pi / 2, math.pi / 2, n)
    return line_plot([("h", psi, h_eval(psi))], "h(psi)", "psi", "h")


def rb_svg(n: int = 400, r_max: float = 4.0) -> str:
    r = np.linspace(r_max / n, r_max, n)
    return line_plot([("r b(r)", r, r * b_eval(r))], "r b(r)", "r", "r b")
