"""
CSV and SVG emission for trial summaries.

CSV columns are fixed; numbers are written with 17 significant digits so a
parse recovers every float exactly. SVG charts are emitted by hand.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np


COLUMNS = ("config_fingerprint", "suite", "trial", "t", "agent", "gap_running_mean",
           "gap_reciprocal", "gap_alpha_weighted", "consensus", "bound")
METRIC_COLUMNS = {
    "gap-running-mean": "gap_running_mean",
    "gap-reciprocal": "gap_reciprocal",
    "gap-alpha-weighted": "gap_alpha_weighted",
    "consensus-max-pairwise": "consensus",
}


def fmt(v):
    if v is None:
        return ""
    v = float(v)
    if not math.isfinite(v):
        return ""
    return format(v, ".17g")


def csv_text(summary, suite, config_fingerprint):
    """Aggregate (trial-mean) rows first, then one block of rows per trial."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    t = summary.t
    agent = summary.config.get("tracked_node", "")
    means = {c: summary.mean(k) for k, c in METRIC_COLUMNS.items()
             if k in summary.per_trial}
    bound = summary.bound.values if summary.bound is not None else None
    for c, tc in enumerate(t):
        row = [config_fingerprint, suite, "", int(tc), ""]
        row += [fmt(means[col][c]) if col in means else "" for col in COLUMNS[5:9]]
        row.append(fmt(bound[c]) if bound is not None else "")
        w.writerow(row)
    for k in range(summary.n_trials if summary.per_trial else 0):
        per = {c: summary.per_trial[m][k] for m, c in METRIC_COLUMNS.items()
               if m in summary.per_trial}
        for c, tc in enumerate(t):
            row = [config_fingerprint, suite, k, int(tc), agent]
            row += [fmt(per[col][c]) if col in per else "" for col in COLUMNS[5:9]]
            row.append("")
            w.writerow(row)
    return buf.getvalue()


def write_csv(path, summary, suite, config_fingerprint):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(summary, suite, config_fingerprint))
    return path


def read_csv(path):
    """Rows as dicts; numeric columns parsed to float, empty cells to None."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError("unexpected CSV header")
        for r in reader:
            out = {"config_fingerprint": r["config_fingerprint"], "suite": r["suite"]}
            out["trial"] = int(r["trial"]) if r["trial"] else None
            out["t"] = int(r["t"])
            out["agent"] = int(r["agent"]) if r["agent"] else None
            for col in COLUMNS[5:]:
                out[col] = float(r[col]) if r[col] else None
            rows.append(out)
    return rows


def series(rows, column, trial=None):
    """(t, values) of one column for the aggregate rows or one trial."""
    sel = [r for r in rows if r["trial"] == trial]
    t = np.array([r["t"] for r in sel])
    v = np.array([np.nan if r[column] is None else r[column] for r in sel])
    return t, v


# -- SVG ----------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555")
PANEL_W, PANEL_H = 300, 220
MARGIN_L, MARGIN_B, MARGIN_T = 56, 36, 28


def _decades(lo, hi):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if a == b:
        b += 1
    return a, b


def _panel(ox, oy, title, curves, xlog, ylog):
    """One chart; ``curves`` is a list of (label, t, values, color, dashed)."""
    parts = [f'<g transform="translate({ox},{oy})">']
    pw, ph = PANEL_W - MARGIN_L - 10, PANEL_H - MARGIN_B - MARGIN_T
    parts.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="16" text-anchor="middle" '
                 f'font-size="12">{title}</text>')
    pts = [(t, v) for _, ts, vs, _, _ in curves for t, v in zip(ts, vs)
           if np.isfinite(v) and (v > 0 or not ylog) and (t > 0 or not xlog)]
    if not pts:
        parts.append("</g>")
        return "\n".join(parts)
    xs, ys = np.array([p[0] for p in pts], float), np.array([p[1] for p in pts], float)
    if xlog:
        x0, x1 = _decades(xs.min(), xs.max())
    else:
        x0, x1 = 0.0, float(xs.max()) or 1.0
    if ylog:
        y0, y1 = _decades(ys.min(), ys.max())
    else:
        y0, y1 = float(min(ys.min(), 0.0)), float(ys.max()) or 1.0

    def X(t):
        u = (math.log10(t) - x0) / (x1 - x0) if xlog else (t - x0) / (x1 - x0)
        return MARGIN_L + u * pw

    def Y(v):
        u = (math.log10(v) - y0) / (y1 - y0) if ylog else (v - y0) / (y1 - y0)
        return MARGIN_T + (1 - u) * ph

    parts.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
                 f'fill="none" stroke="#000" stroke-width="0.8"/>')
    yt = range(int(y0), int(y1) + 1) if ylog else np.linspace(y0, y1, 5)
    for e in yt:
        v = 10.0 ** e if ylog else e
        lab = f"1e{e}" if ylog else f"{v:.3g}"
        parts.append(f'<line x1="{MARGIN_L - 4}" x2="{MARGIN_L}" y1="{Y(v):.1f}" '
                     f'y2="{Y(v):.1f}" stroke="#000"/>')
        parts.append(f'<text x="{MARGIN_L - 6}" y="{Y(v) + 3:.1f}" text-anchor="end" '
                     f'font-size="9">{lab}</text>')
    xt = range(int(x0), int(x1) + 1) if xlog else np.linspace(x0, x1, 5)
    for e in xt:
        v = 10.0 ** e if xlog else e
        lab = f"1e{e}" if xlog else f"{v:.0f}"
        parts.append(f'<line x1="{X(v):.1f}" x2="{X(v):.1f}" y1="{MARGIN_T + ph}" '
                     f'y2="{MARGIN_T + ph + 4}" stroke="#000"/>')
        parts.append(f'<text x="{X(v):.1f}" y="{MARGIN_T + ph + 15}" '
                     f'text-anchor="middle" font-size="9">{lab}</text>')
    parts.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{PANEL_H - 4}" '
                 f'text-anchor="middle" font-size="10">t</text>')
    for k, (label, ts, vs, color, dashed) in enumerate(curves):
        segs, cur = [], []
        for t, v in zip(ts, vs):
            if np.isfinite(v) and (v > 0 or not ylog) and (t > 0 or not xlog):
                cur.append(f"{X(t):.2f},{Y(v):.2f}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        dash = ' stroke-dasharray="5,3"' if dashed else ""
        for seg in segs:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"'
                         f'{dash} points="{" ".join(seg)}"/>')
        ly = MARGIN_T + 10 + 12 * k
        parts.append(f'<line x1="{MARGIN_L + pw - 92}" x2="{MARGIN_L + pw - 76}" '
                     f'y1="{ly}" y2="{ly}" stroke="{color}"{dash}/>')
        parts.append(f'<text x="{MARGIN_L + pw - 72}" y="{ly + 3}" font-size="9">'
                     f'{label}</text>')
    parts.append("</g>")
    return "\n".join(parts)


def svg_text(summary, title=""):
    """Gap (log-linear and log-log) and consensus (log-linear) charts."""
    t = summary.t
    gaps = []
    for k, m in enumerate(("gap-running-mean", "gap-reciprocal", "gap-alpha-weighted")):
        if m in summary.per_trial:
            gaps.append((m[4:], t, summary.mean(m), PALETTE[k], False))
    if summary.bound is not None:
        gaps.append(("bound", t, summary.bound.values, PALETTE[5], True))
    cons = []
    if "consensus-max-pairwise" in summary.per_trial:
        cons.append(("consensus", t, summary.mean("consensus-max-pairwise"),
                     PALETTE[3], False))
    width = 3 * PANEL_W
    height = PANEL_H + 24
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="#fff"/>',
        f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="13">'
        f'{_escape(title)}</text>',
        _panel(0, 20, "gap (log-linear)", gaps, xlog=False, ylog=True),
        _panel(PANEL_W, 20, "gap (log-log)", gaps, xlog=True, ylog=True),
        _panel(2 * PANEL_W, 20, "consensus (log-linear)", cons, xlog=False, ylog=True),
        "</svg>",
    ]
    return "\n".join(body) + "\n"


def _escape(s):
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def write_svg(path, summary, title=""):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg_text(summary, title))
    return path
