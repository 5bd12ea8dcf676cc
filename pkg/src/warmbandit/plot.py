"""Static SVG plots of mean final regret against the swept parameter.

Output is plain hand-assembled SVG: fixed canvas, fixed palette assigned by
sorted policy name, numbers printed with fixed precision. Identical input
always gives byte-identical files.
"""
import logging
from collections import OrderedDict

from .sim import atomic_write_text, parse_summary_csv

log = logging.getLogger(__name__)

PANEL_W, PANEL_H = 420, 320
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 34, 48
LEGEND_H = 24
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f")


def _f(x):
    return f"{x:.2f}"


def _tick(x):
    return f"{x:.6g}"


def _panel(exp, rows, colors, ox):
    out = []
    xs = sorted({r.param for r in rows})
    lo_y = min(0.0, min(r.mean - r.std for r in rows))
    hi_y = max(r.mean + r.std for r in rows)
    if hi_y <= lo_y:
        hi_y = lo_y + 1.0
    x0, x1 = ox + MARGIN_L, ox + PANEL_W - MARGIN_R
    y0, y1 = MARGIN_T + PANEL_H - MARGIN_B, MARGIN_T
    span_x = (xs[-1] - xs[0]) or 1.0

    def sx(x):
        if len(xs) == 1:
            return (x0 + x1) / 2
        return x0 + (x - xs[0]) / span_x * (x1 - x0)

    def sy(y):
        return y0 - (y - lo_y) / (hi_y - lo_y) * (y0 - y1)

    out.append(f'<g class="panel" id="panel-{exp}">')
    out.append(f'<text x="{_f((x0 + x1) / 2)}" y="{_f(MARGIN_T - 12)}" text-anchor="middle" font-size="13">{exp}</text>')
    out.append(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y0)}" stroke="black"/>')
    out.append(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x0)}" y2="{_f(y1)}" stroke="black"/>')
    for x in xs:
        px = sx(x)
        out.append(f'<g class="xtick"><line x1="{_f(px)}" y1="{_f(y0)}" x2="{_f(px)}" y2="{_f(y0 + 4)}" stroke="black"/>'
                   f'<text x="{_f(px)}" y="{_f(y0 + 16)}" text-anchor="middle" font-size="10">{_tick(x)}</text></g>')
    for i in range(5):
        yv = lo_y + (hi_y - lo_y) * i / 4
        py = sy(yv)
        out.append(f'<g class="ytick"><line x1="{_f(x0 - 4)}" y1="{_f(py)}" x2="{_f(x0)}" y2="{_f(py)}" stroke="black"/>'
                   f'<text x="{_f(x0 - 6)}" y="{_f(py + 3)}" text-anchor="end" font-size="10">{_tick(round(yv, 6))}</text></g>')
    out.append(f'<text x="{_f((x0 + x1) / 2)}" y="{_f(y0 + 34)}" text-anchor="middle" font-size="11">param</text>')
    by_policy = OrderedDict()
    for r in sorted(rows, key=lambda r: (r.policy, r.param)):
        by_policy.setdefault(r.policy, []).append(r)
    for pol, pts in by_policy.items():
        col = colors[pol]
        coords = " ".join(f"{_f(sx(r.param))},{_f(sy(r.mean))}" for r in pts)
        out.append(f'<g class="series" data-policy="{pol}">')
        if len(pts) > 1:
            out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{coords}"/>')
        for r in pts:
            px, py = sx(r.param), sy(r.mean)
            if r.std > 0:
                out.append(f'<line class="errbar" x1="{_f(px)}" y1="{_f(sy(r.mean - r.std))}" x2="{_f(px)}" '
                           f'y2="{_f(sy(r.mean + r.std))}" stroke="{col}"/>')
            out.append(f'<circle class="marker" cx="{_f(px)}" cy="{_f(py)}" r="2.5" fill="{col}"/>')
        out.append("</g>")
    out.append("</g>")
    return out


def render_svg(rows):
    """SVG text for summary rows, one panel per experiment. None if ``rows`` is empty."""
    if not rows:
        return None
    experiments = OrderedDict()
    for r in rows:
        experiments.setdefault(r.experiment, []).append(r)
    policies = sorted({r.policy for r in rows})
    colors = {p: PALETTE[i % len(PALETTE)] for i, p in enumerate(policies)}
    width = PANEL_W * len(experiments)
    height = PANEL_H + MARGIN_T + LEGEND_H
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for i, (exp, rs) in enumerate(experiments.items()):
        out.extend(_panel(exp, rs, colors, i * PANEL_W))
    ly = PANEL_H + MARGIN_T + 10
    for i, p in enumerate(policies):
        lx = MARGIN_L + i * 110
        out.append(f'<g class="legend"><rect x="{lx}" y="{ly - 8}" width="10" height="10" fill="{colors[p]}"/>'
                   f'<text x="{lx + 14}" y="{ly + 1}" font-size="11">{p}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_plot(summary_csv_path, svg_path):
    """Render a summary CSV to ``svg_path``. Returns False (and writes nothing) on empty input."""
    with open(summary_csv_path, encoding="utf-8") as fh:
        rows = parse_summary_csv(fh.read())
    svg = render_svg(rows)
    if svg is None:
        log.warning("summary %s has no rows; no plot written", summary_csv_path)
        return False
    atomic_write_text(svg_path, svg)
    return True
