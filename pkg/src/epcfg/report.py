"""CSV and SVG emission for simulation traces.

Numbers are written with 17 significant digits so reruns are byte-stable.
"""

import csv
import math
import os
from xml.sax.saxutils import escape

from .exceptions import MalformedCsv

TRACE_COLUMNS = ("step", "mean_ratio", "max_ratio", "fallback_frac", "mean_moment")


def fmt(value):
    return format(float(value), ".17g")


def write_trace_csv(path, summary):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for step, *vals in summary.rows():
            w.writerow([int(step)] + [fmt(v) for v in vals])


def write_samples_csv(path, samples):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index"] + [f"x{j}" for j in range(samples.shape[1])])
        for i, row in enumerate(samples.tolist()):
            w.writerow([i] + [fmt(v) for v in row])


def read_trace_csv(path):
    """Return ``(steps, mean_ratios)`` from a trace CSV."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise MalformedCsv(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise MalformedCsv(f"{path}: no data rows")
    if "step" not in rows[0] or "mean_ratio" not in rows[0]:
        raise MalformedCsv(f"{path}: missing step/mean_ratio columns")
    steps, ratios = [], []
    for lineno, row in enumerate(rows, 2):
        try:
            s, r = float(row["step"]), float(row["mean_ratio"])
        except (TypeError, ValueError):
            raise MalformedCsv(f"{path}:{lineno}: non-numeric value") from None
        if not (math.isfinite(s) and math.isfinite(r)) or r <= 0:
            raise MalformedCsv(f"{path}:{lineno}: ratio must be finite and positive")
        steps.append(s)
        ratios.append(r)
    return steps, ratios


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
_W, _H = 640, 400
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 160, 30, 50


def render_svg(series):
    """SVG line chart of log10(mean_ratio) against step.

    ``series`` is a list of ``(label, steps, ratios)``. The step axis runs from
    the first denoising step (largest ``t``) on the left to ``t = 1``.
    """
    all_steps = [s for _, steps, _ in series for s in steps]
    all_logs = [math.log10(r) for _, _, ratios in series for r in ratios]
    s_hi, s_lo = max(all_steps), min(all_steps)
    y_lo, y_hi = math.floor(min(all_logs + [0.0])), math.ceil(max(all_logs + [0.0]))
    if y_hi == y_lo:
        y_hi = y_lo + 1
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(s):
        if s_hi == s_lo:
            return _LEFT + pw / 2
        return _LEFT + pw * (s_hi - s) / (s_hi - s_lo)

    def py(v):
        return _TOP + ph * (y_hi - v) / (y_hi - y_lo)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for dec in range(y_lo, y_hi + 1):
        y = py(dec)
        out.append(
            f'<line x1="{_LEFT}" y1="{y:.2f}" x2="{_LEFT + pw}" y2="{y:.2f}" stroke="#dddddd"/>'
        )
        out.append(f'<text x="{_LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">1e{dec}</text>')
    for s in sorted({s_lo, s_hi}):
        out.append(
            f'<text x="{px(s):.2f}" y="{_TOP + ph + 16}" text-anchor="middle">{s:g}</text>'
        )
    out.append(
        f'<text x="{_LEFT + pw / 2:.2f}" y="{_H - 12}" text-anchor="middle">'
        "denoising step t</text>"
    )
    out.append(
        f'<text x="16" y="{_TOP + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_TOP + ph / 2:.2f})">mean robust energy ratio</text>'
    )
    for i, (label, steps, ratios) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(s):.2f},{py(math.log10(r)):.2f}" for s, r in zip(steps, ratios))
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
        )
        ly = _TOP + 14 + 16 * i
        out.append(
            f'<line x1="{_W - _RIGHT + 10}" y1="{ly - 4}" x2="{_W - _RIGHT + 30}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>'
        )
        out.append(f'<text x="{_W - _RIGHT + 34}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(trace_csv_paths, out_svg_path, labels=None):
    """Render one polyline per trace CSV into a standalone SVG file."""
    if isinstance(trace_csv_paths, (str, os.PathLike)):
        trace_csv_paths = [trace_csv_paths]
    if labels is None:
        labels = [_default_label(p) for p in trace_csv_paths]
    series = [(lab, *read_trace_csv(p)) for lab, p in zip(labels, trace_csv_paths)]
    with open(out_svg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(series))


def _default_label(path):
    path = os.path.normpath(os.fspath(path))
    parent = os.path.basename(os.path.dirname(path))
    stem = os.path.splitext(os.path.basename(path))[0]
    return f"{parent}/{stem}" if parent else stem
