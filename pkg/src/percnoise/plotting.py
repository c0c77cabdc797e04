"""Deterministic SVG charts over the sweep results CSV.

Output contains no timestamps or random ids and every coordinate is
formatted with fixed precision, so the same CSV always renders to the same
bytes. The theoretical overlay is sampled at the exact data abscissae
(plus a dense grid), so on exactly-fitting data it passes through every
plotted point.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, PlotError
from .helmholtz import curve_value, detect_knee, fit_curve
from .sweep import mean_accuracy_points, read_records_csv

PLOT_KINDS = ("accuracy-vs-q", "epochs-vs-q", "accuracy-vs-params")

WIDTH, HEIGHT = 640, 440
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 24, 42, 52

_PALETTE = ("#1f77b4", "#2ca02c", "#d62728", "#9467bd",
            "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")

_AXIS_LABELS = {
    "accuracy-vs-q": ("quantization fraction Q", "test accuracy"),
    "epochs-vs-q": ("quantization fraction Q", "epochs to converge"),
    "accuracy-vs-params": ("parameter count", "test accuracy"),
}


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    input_csv: str
    output_svg: str
    title: str = ""
    overlay_theoretical: bool = False
    tau: float = 0.05

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise PlotError(f"plot kind must be one of {PLOT_KINDS}, got {self.kind!r}")


class _Frame:
    """Value-to-pixel transform over the drawable box."""

    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.px0, self.px1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        self.py0, self.py1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP

    def x(self, v) -> float:
        return self.px0 + (v - self.x0) / (self.x1 - self.x0) * (self.px1 - self.px0)

    def y(self, v) -> float:
        return self.py0 + (v - self.y0) / (self.y1 - self.y0) * (self.py1 - self.py0)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _series_for(records, kind: str):
    """Per-architecture (x, y) series, sorted for stable output."""
    archs = sorted({r.arch for r in records})
    series = {}
    for arch in archs:
        if kind == "accuracy-vs-q":
            series[arch] = mean_accuracy_points(records, arch)
        elif kind == "epochs-vs-q":
            by_q = {}
            for rec in records:
                if rec.arch == arch and rec.ok:
                    by_q.setdefault(rec.normalized_q, []).append(rec.epochs_to_converge)
            series[arch] = [(q, float(np.mean(by_q[q]))) for q in sorted(by_q)]
        else:
            pts = [(rec.params, rec.test_accuracy)
                   for rec in records if rec.arch == arch and rec.ok]
            series[arch] = sorted(pts)
        if not series[arch]:
            raise PlotError(f"no successful records to plot for {arch}")
    return series


def _ranges(series, kind: str):
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    lo, hi = min(xs), max(xs)
    pad = 0.05 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.05
    x_range = (lo - pad, hi + pad)
    if kind in ("accuracy-vs-q", "accuracy-vs-params"):
        y_range = (0.0, 1.0)
    else:
        y_range = (0.0, max(ys) * 1.15 if ys else 1.0)
    return x_range, y_range


def _overlay_points(records, arch: str, data_xs, tau: float):
    """Fitted-curve samples at the data abscissae plus a dense grid."""
    points = mean_accuracy_points(records, arch)
    if len(points) < 2:
        raise PlotError(f"overlay needs >= 2 quality points for {arch}")
    if len(points) >= 4:
        knee = detect_knee(points, tau)
        plateau = [p for p in points if p[0] <= knee]
        c = fit_curve(plateau if len(plateau) >= 2 else points)
    else:
        c = fit_curve(points)
    dense = np.linspace(min(data_xs), max(data_xs), 101)
    xs = np.unique(np.concatenate([np.asarray(data_xs, dtype=np.float64), dense]))
    return [(float(x), float(curve_value(c, x))) for x in xs]


def render_plot(spec: PlotSpec) -> Path:
    """Render one chart; returns the written SVG path."""
    try:
        records = read_records_csv(spec.input_csv)
    except ConfigError as exc:
        raise PlotError(str(exc)) from exc
    if not records:
        raise PlotError(f"{spec.input_csv}: no records to plot")

    series = _series_for(records, spec.kind)
    frame = _Frame(*_ranges(series, spec.kind))
    xlabel, ylabel = _AXIS_LABELS[spec.kind]
    title = spec.title or spec.kind

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_escape(title)}</text>',
    ]
    parts.extend(_axes(frame, xlabel, ylabel))

    for i, (arch, pts) in enumerate(sorted(series.items())):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{_fmt(frame.x(x))},{_fmt(frame.y(y))}" for x, y in pts)
        parts.append(f'<polyline class="series" fill="none" stroke="{color}" '
                     f'stroke-width="1.5" points="{coords}"/>')
        for x, y in pts:
            parts.append(f'<circle class="pt" cx="{_fmt(frame.x(x))}" '
                         f'cy="{_fmt(frame.y(y))}" r="3" fill="{color}"/>')
        if spec.overlay_theoretical and spec.kind == "accuracy-vs-q":
            overlay = _overlay_points(records, arch, [x for x, _ in pts], spec.tau)
            clipped = [(x, min(max(y, frame.y0), frame.y1)) for x, y in overlay]
            coords = " ".join(f"{_fmt(frame.x(x))},{_fmt(frame.y(y))}"
                              for x, y in clipped)
            parts.append(f'<polyline class="overlay" fill="none" stroke="{color}" '
                         f'stroke-width="1.2" stroke-dasharray="5 4" opacity="0.65" '
                         f'points="{coords}"/>')
        ly = MARGIN_TOP + 14 + 16 * i
        lx = WIDTH - MARGIN_RIGHT - 110
        parts.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{lx + 14}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12">{_escape(arch)}</text>')

    parts.append("</svg>")
    out = Path(spec.output_svg)
    out.write_text("\n".join(parts) + "\n")
    return out


def _axes(frame: _Frame, xlabel: str, ylabel: str) -> list:
    parts = [
        f'<line x1="{frame.px0}" y1="{frame.py0}" x2="{frame.px1}" y2="{frame.py0}" '
        f'stroke="#000000"/>',
        f'<line x1="{frame.px0}" y1="{frame.py0}" x2="{frame.px0}" y2="{frame.py1}" '
        f'stroke="#000000"/>',
        f'<text x="{(frame.px0 + frame.px1) // 2}" y="{HEIGHT - 12}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">'
        f'{_escape(xlabel)}</text>',
        f'<text x="16" y="{(frame.py0 + frame.py1) // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {(frame.py0 + frame.py1) // 2})">'
        f'{_escape(ylabel)}</text>',
    ]
    for tick in np.linspace(frame.x0, frame.x1, 5):
        px = frame.x(tick)
        parts.append(f'<line x1="{_fmt(px)}" y1="{frame.py0}" x2="{_fmt(px)}" '
                     f'y2="{frame.py0 + 5}" stroke="#000000"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{frame.py0 + 20}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{tick:.3g}</text>')
    for tick in np.linspace(frame.y0, frame.y1, 5):
        py = frame.y(tick)
        parts.append(f'<line x1="{frame.px0 - 5}" y1="{_fmt(py)}" x2="{frame.px0}" '
                     f'y2="{_fmt(py)}" stroke="#000000"/>')
        parts.append(f'<text x="{frame.px0 - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{tick:.3g}</text>')
    return parts


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
