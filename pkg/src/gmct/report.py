"""Serialized views of an MctResult: JSON document, TSV table, SVG forest plot.

Floats are rounded to ``SIG_DIGITS`` significant digits before output so
that last-bit differences in linear algebra never change the bytes written;
infinities are written as the strings ``"inf"`` and ``"-inf"``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from html import escape

import numpy as np

from . import __version__
from .core import NULL_VALUE, MctResult

SIG_DIGITS = 12
ROW_FIELDS = ("label", "estimate", "se", "df", "statistic", "lower", "upper", "p_adj", "flags")


def clean(value):
    """JSON-safe copy of ``value`` with rounded floats and string infinities."""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(f"{value:.{SIG_DIGITS}g}")
    return value


def fmt(value) -> str:
    """Text form of one number exactly as it appears in the JSON."""
    value = clean(value)
    return "nan" if value is None else str(value)


def input_hash(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def result_document(result: MctResult, seed: int, source_hash: str) -> dict:
    rows = []
    for r in result.rows:
        rows.append({
            "label": r.label,
            "estimate": r.estimate,
            "se": r.se,
            "df": r.df,
            "statistic": r.statistic,
            "lower": r.lower,
            "upper": r.upper,
            "p_adj": r.p_adjusted,
            "flags": list(r.flags),
            "shape": r.shape,
            "extra": r.extra,
        })
    doc = {
        "method": result.method,
        "scale": result.scale,
        "conf": result.conf_level,
        "alternative": result.alternative,
        "seed": seed,
        "critical_value": result.critical_value,
        "global_p": result.global_p,
        "null_value": NULL_VALUE[result.scale],
        "rows": rows,
        "correlation": result.correlation,
        "metadata": result.metadata,
        "warnings": list(result.warnings),
        "provenance": {"version": __version__, "input-hash": source_hash},
    }
    return clean(doc)


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def result_tsv(doc: dict) -> str:
    lines = ["\t".join(ROW_FIELDS + ("shape",))]
    for row in doc["rows"]:
        cells = []
        for name in ROW_FIELDS + ("shape",):
            v = row[name]
            if name == "flags":
                v = ";".join(v)
            cells.append("nan" if v is None else str(v))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


WIDTH = 800
LABEL_X = 10
PLOT_LEFT = 220
PLOT_RIGHT = 770
TOP = 20
ROW_H = 24


def _finite(values):
    return [v for v in values if isinstance(v, float | int) and not isinstance(v, bool)]


def forest_svg(doc: dict) -> str:
    """One line per comparison, in the row order of ``doc`` (alphabetical labels).

    Interval ends that are infinite end in an arrowhead at the plot edge; an
    exclusive-complement set is drawn as two outward rays. Numeric values are
    carried in ``data-*`` attributes using the JSON text, so the plot holds no
    number that is not in the document.
    """
    rows = doc["rows"]
    null = doc["null_value"]
    xi = len(rows)
    height = 40 + ROW_H * xi
    span = _finite([null] + [r[f] for r in rows for f in ("estimate", "lower", "upper")])
    lo, hi = min(span), max(span)
    if hi - lo <= 0:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def x(v):
        if v == "-inf":
            return PLOT_LEFT
        if v == "inf":
            return PLOT_RIGHT
        return PLOT_LEFT + (v - lo) / (hi - lo) * (PLOT_RIGHT - PLOT_LEFT)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="monospace" font-size="12">',
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" markerHeight="8" '
        'orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z" fill="black"/></marker></defs>',
        f'<title>{escape(doc["method"])}</title>',
        f'<line x1="{x(null):.2f}" y1="{TOP - 6}" x2="{x(null):.2f}" y2="{height - 10}" stroke="grey" '
        f'stroke-dasharray="4 3" data-null="{fmt(null)}"/>',
    ]
    for i, r in enumerate(rows):
        y = TOP + ROW_H * i + ROW_H / 2
        lower, upper, shape = r["lower"], r["upper"], r["shape"]
        out.append(
            f'<g data-label="{escape(r["label"])}" data-estimate="{fmt(r["estimate"])}" '
            f'data-lower="{fmt(lower)}" data-upper="{fmt(upper)}" data-shape="{shape}">'
        )
        out.append(f'<text x="{LABEL_X}" y="{y + 4:.2f}">{escape(r["label"])}</text>')
        if shape == "exclusive-complement":
            segments = [("-inf", lower), (upper, "inf")]
        elif shape == "whole-line":
            segments = [("-inf", "inf")]
        else:
            segments = [(lower, upper)]
        for a, b in segments:
            marks = ""
            if a == "-inf":
                marks += ' marker-start="url(#arrow)"'
            if b == "inf":
                marks += ' marker-end="url(#arrow)"'
            out.append(f'<line x1="{x(a):.2f}" y1="{y:.2f}" x2="{x(b):.2f}" y2="{y:.2f}" stroke="black"{marks}/>')
        if not isinstance(r["estimate"], str) and r["estimate"] is not None:
            out.append(f'<rect x="{x(r["estimate"]) - 3:.2f}" y="{y - 3:.2f}" width="6" height="6"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_atomic(path, text: str):
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gmct-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def km_svg(curves: dict) -> str:
    """Step plot of product-limit curves ``{label: {"time": [...], "survival": [...]}}``.

    Times and survival values are JSON-rounded numbers; each curve carries
    them in ``data-*`` attributes.
    """
    height = 40 + ROW_H * max(len(curves), 10)
    t_max = max([max(c["time"], default=0.0) for c in curves.values()] + [1e-12])
    top, bottom = TOP, height - 20

    def px(t):
        return PLOT_LEFT + t / t_max * (PLOT_RIGHT - PLOT_LEFT)

    def py(s):
        return bottom - s * (bottom - top)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="monospace" font-size="12">',
        f'<line x1="{PLOT_LEFT}" y1="{bottom}" x2="{PLOT_RIGHT}" y2="{bottom}" stroke="grey"/>',
        f'<line x1="{PLOT_LEFT}" y1="{top}" x2="{PLOT_LEFT}" y2="{bottom}" stroke="grey"/>',
    ]
    dashes = ["", ' stroke-dasharray="6 3"', ' stroke-dasharray="2 2"', ' stroke-dasharray="8 3 2 3"']
    for i, (label, c) in enumerate(curves.items()):
        pts = [(PLOT_LEFT, py(1.0))]
        s_prev = 1.0
        for t, s in zip(c["time"], c["survival"]):
            pts.append((px(t), py(s_prev)))
            pts.append((px(t), py(s)))
            s_prev = s
        pts.append((PLOT_RIGHT, py(s_prev)))
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        out.append(
            f'<polyline points="{path}" fill="none" stroke="black"{dashes[i % len(dashes)]} '
            f'data-label="{escape(label)}" data-time="{" ".join(fmt(t) for t in c["time"])}" '
            f'data-survival="{" ".join(fmt(s) for s in c["survival"])}"/>'
        )
        out.append(f'<text x="{LABEL_X}" y="{TOP + ROW_H * i + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
