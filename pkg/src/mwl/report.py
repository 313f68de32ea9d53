"""Report JSON, CSV tables and the SVG tail chart.

Everything here is a deterministic function of pipeline outputs, except the
``timings`` block of the report, which is kept under its own key so that
reruns can be compared after dropping it.
"""
from __future__ import annotations

import csv
import io
import math
from importlib import resources

import numpy as np

from . import __version__, jsonio

TAIL_HEADER = ("theta", "prob", "ci_low", "ci_high", "trials", "K", "k")
BOUND_HEADER = ("theta", "gap_source", "gap_value", "t_star", "bound_raw", "bound_capped")
REPORT_FORMAT = "mwl-experiment-report"
REPORT_VERSION = 1


def _cell(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return jsonio.fmt_real(x)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def tail_csv(tail):
    return _csv(TAIL_HEADER, tail.csv_rows())


def bound_csv(reports):
    return _csv(BOUND_HEADER, (r.csv_row() for r in reports))


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def spectrum_dict(summary):
    out = {
        "gap_convention": summary.gap_convention,
        "second_largest": summary.second_largest,
        "gap": summary.gap,
    }
    out.update(summary.report())
    return out


def bound_dict(r):
    return {
        "theta": r.theta,
        "gap_source": r.source.label,
        "gap_value": r.source.gap_value,
        "t_star": r.t_star,
        "bound_raw": _finite_or_none(r.bound_raw),
        "bound_capped": r.bound_capped,
        "overflow": r.minimum.overflow,
        "boundary_minimum": r.minimum.boundary,
        "grid_rel_diff": _finite_or_none(r.minimum.grid_rel_diff),
    }


def experiment_report(res, spot_check_walks=64):
    """The report document for an :class:`~mwl.pipeline.ExperimentResult`."""
    g, t = res.graph, res.tail
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "package_version": __version__,
        "config": res.config.to_dict(),
        "graph": {
            "n_vertices": g.n_vertices,
            "n_edges": g.n_edges,
            "kappa": g.kappa,
            "epsilon": g.epsilon,
            "degree": g.degree_stats(),
        },
        "spectrum": spectrum_dict(res.summary),
        "tail": {
            "thresholds": t.thresholds,
            "probabilities": t.probabilities,
            "ci_low": t.ci_low,
            "ci_high": t.ci_high,
            "counts": t.counts,
            "trials": t.trials,
            "K": t.walk_length,
            "k": t.ky_fan_k,
        },
        "bounds": [bound_dict(r) for r in res.bounds],
        "envelope": res.envelope,
        "assumption3": {
            "min_margin": _finite_or_none(t.assumption3_margin),
            "ok": bool(t.assumption3_ok),
            "walks_checked": min(spot_check_walks, t.trials),
            "tolerance": -1e-8,
        },
        "flags": res.flags,
        "timings": {k: round(v, 6) for k, v in res.timings.items()},
    }


def report_json(doc):
    return jsonio.dumps(doc, indent=1) + "\n"


def load_schema(name="report.schema.json"):
    return jsonio.loads(resources.files("mwl.schemas").joinpath(name).read_text("utf-8"), name)


# SVG chart ---------------------------------------------------------------

_W, _H = 760, 460
_ML, _MR, _MT, _MB = 70, 210, 30, 50
_COLORS = ("#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _f(x):
    return f"{x:.2f}"


def tail_svg(tail, reports, title="Tail probability vs threshold"):
    """Line chart: theta on x, log10 probability on y, CI band plus bound curves."""
    th = np.asarray(tail.thresholds, dtype=np.float64)
    floor = math.log10(0.5 / tail.trials)
    logp = lambda v: np.log10(np.maximum(np.asarray(v, float), 10.0**floor))  # noqa: E731
    xmin, xmax = float(th.min()), float(th.max())
    if xmax <= xmin:
        xmax = xmin + 1.0
    ymin, ymax = math.floor(floor), 0.5
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - xmin) / (xmax - xmin) * pw

    def py(y):
        return _MT + (ymax - min(max(y, ymin), ymax)) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_ML}" y="18" font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for y in range(int(ymin), 1):
        out.append(f'<line x1="{_ML}" y1="{_f(py(y))}" x2="{_ML + pw}" y2="{_f(py(y))}" '
                   'stroke="#dddddd"/>')
        out.append(f'<text x="{_ML - 6}" y="{_f(py(y) + 4)}" font-family="sans-serif" font-size="11" '
                   f'text-anchor="end">1e{y}</text>')
    for x in np.linspace(xmin, xmax, 6):
        out.append(f'<text x="{_f(px(x))}" y="{_MT + ph + 16}" font-family="sans-serif" font-size="11" '
                   f'text-anchor="middle">{x:.3g}</text>')
    out.append(f'<text x="{_ML + pw / 2:.2f}" y="{_H - 10}" font-family="sans-serif" font-size="12" '
               'text-anchor="middle">theta</text>')
    out.append(f'<text x="16" y="{_MT + ph / 2:.2f}" font-family="sans-serif" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 16 {_MT + ph / 2:.2f})">log10 probability</text>')

    hi, lo = logp(tail.ci_high), logp(tail.ci_low)
    band = [f"{_f(px(x))},{_f(py(y))}" for x, y in zip(th, hi)]
    band += [f"{_f(px(x))},{_f(py(y))}" for x, y in zip(th[::-1], lo[::-1])]
    out.append(f'<polygon points="{" ".join(band)}" fill="#1f77b4" fill-opacity="0.25" stroke="none"/>')
    pts = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in zip(th, logp(tail.probabilities)))
    out.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    legend = [("#1f77b4", "empirical (95% CI band)")]

    curves = {}
    for r in reports:
        curves.setdefault(r.source.label, []).append((r.theta, r.bound_capped))
    for color, (label, rows) in zip(_COLORS * 4, curves.items()):
        rows.sort()
        pts = " ".join(f"{_f(px(x))},{_f(py(math.log10(v)))}" for x, v in rows if v > 0)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5" '
                   'stroke-dasharray="6,3"/>')
        legend.append((color, label))
    for i, (color, label) in enumerate(legend):
        y = _MT + 10 + 18 * i
        x = _ML + pw + 12
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 24}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x + 30}" y="{y + 4}" font-family="sans-serif" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
