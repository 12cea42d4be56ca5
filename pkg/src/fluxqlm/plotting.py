"""Dependency-free SVG line plots of sweep columns."""
from __future__ import annotations

import hashlib
import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

W, H = 480, 320
ML, MR, MT, MB = 60, 20, 30, 45
BOUNDED = {"thooft_pi", "thooft_half"}


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def svg_plot(x: Sequence[float], y: Sequence[float], xlabel: str, ylabel: str,
             cfg_hash: str = "", log_x: bool = False, y_range: Optional[tuple] = None) -> Optional[str]:
    """One polyline; returns None when fewer than two finite points remain."""
    pts = [(a, b) for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b) and (a > 0 or not log_x)]
    if len(pts) < 2:
        return None
    tx = (lambda v: math.log10(v)) if log_x else (lambda v: v)
    xs = [tx(a) for a, _ in pts]
    ys = [b for _, b in pts]
    x0, x1 = min(xs), max(xs)
    if y_range is None:
        y0, y1 = min(ys), max(ys)
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
    else:
        y0, y1 = y_range
    pw, ph = W - ML - MR, H - MT - MB

    def px(v):
        return ML + (v - x0) / (x1 - x0) * pw if x1 > x0 else ML + pw / 2

    def py(v):
        v = min(max(v, y0), y1)
        return MT + (1.0 - (v - y0) / (y1 - y0)) * ph

    poly = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f"<!-- config-hash {cfg_hash} -->",
           f'<metadata>{{"config_hash": "{cfg_hash}", "y_min": {y0!r}, "y_max": {y1!r}}}</metadata>',
           f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        lab = f"{10 ** t:.3g}" if log_x else f"{t:.3g}"
        out.append(f'<text x="{px(t):.2f}" y="{H - MB + 16}" font-size="10" text-anchor="middle">{lab}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ML - 6}" y="{py(t) + 3:.2f}" font-size="10" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="{H - 8}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{MT + ph / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {MT + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{poly}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_columns(header: Sequence[str], rows: Sequence[Sequence], control: str, columns: Sequence[str],
                 cfg_hash: str = "", log_x: bool = False) -> dict:
    """name -> SVG text for every requested column; columns with < 2 rows are skipped."""
    if len(rows) < 2:
        return {}
    ix = header.index(control)
    out = {}
    for c in columns:
        if c not in header:
            continue
        j = header.index(c)
        xs = [float(r[ix]) for r in rows]
        ys = [float(r[j]) for r in rows]
        yr = (0.0, 1.05) if c in BOUNDED else None
        svg = svg_plot(xs, ys, control, c, cfg_hash, log_x, yr)
        if svg is not None:
            out[c] = svg
    return out
