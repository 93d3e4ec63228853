"""SVG rendering of a scan figure: scatter, best fit, reference curve.

The output is plain SVG text with fixed styling and no timestamps or
generator metadata, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import math
import os
import tempfile

from figrender.spec import FigureSpec, load_fit_curves, load_scan_points

WIDTH, HEIGHT = 800, 520
MARGIN = {"left": 72, "right": 24, "top": 48, "bottom": 56}
CURVE_SAMPLES = 200

REFERENCE_LABEL = {1.0: "d", 4.0 / 3.0: "d^(4/3)", 1.5: "d^(3/2)"}


def _fmt(x: float) -> str:
    return format(x, ".2f")


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(round(t, 10))
        t += step
    return ticks


class _Axes:
    def __init__(self, xs, ys):
        self.x_lo, self.x_hi = min(xs), max(xs)
        self.y_lo, self.y_hi = 0.0, max(ys)
        pad_x = 0.04 * (self.x_hi - self.x_lo or 1.0)
        pad_y = 0.06 * (self.y_hi - self.y_lo or 1.0)
        self.x_lo -= pad_x
        self.x_hi += pad_x
        self.y_hi += pad_y

    def px(self, x: float) -> float:
        frac = (x - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN["left"] + frac * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN["bottom"] - frac * (HEIGHT - MARGIN["top"] - MARGIN["bottom"])


def _polyline(axes: _Axes, a: float, c: float, b: float, x_lo: float, x_hi: float) -> str:
    pts = []
    for i in range(CURVE_SAMPLES + 1):
        x = x_lo + (x_hi - x_lo) * i / CURVE_SAMPLES
        y = a * x**c + b
        if axes.y_lo <= y <= axes.y_hi:
            pts.append(f"{_fmt(axes.px(x))},{_fmt(axes.py(y))}")
    return " ".join(pts)


def render_svg(spec: FigureSpec) -> str:
    """The SVG document for a figure spec (pure function of the CSVs)."""
    points = load_scan_points(spec.scan_csv, spec.family_k)
    curves = load_fit_curves(spec.fit_csv, spec.family_k)
    best = curves[0]
    reference = curves[1] if len(curves) > 1 else None

    axes = _Axes([p[0] for p in points], [p[1] for p in points])
    x_lo, x_hi = min(p[0] for p in points), max(p[0] for p in points)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    title = spec.title or f"Minimal copies vs dimension (family k={spec.family_k})"
    parts.append(
        f'<text x="{WIDTH / 2:.0f}" y="28" text-anchor="middle" '
        f'font-family="Helvetica,Arial,sans-serif" font-size="17" fill="#1a1a2e">'
        f"{_escape(title)}</text>"
    )

    # grid and ticks
    for tx in _nice_ticks(axes.x_lo, axes.x_hi):
        px = axes.px(tx)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{MARGIN["top"]}" x2="{_fmt(px)}" '
            f'y2="{HEIGHT - MARGIN["bottom"]}" stroke="#e6e6ef" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN["bottom"] + 20}" text-anchor="middle" '
            f'font-family="Helvetica,Arial,sans-serif" font-size="12" fill="#444455">{tx:g}</text>'
        )
    for ty in _nice_ticks(axes.y_lo, axes.y_hi):
        py = axes.py(ty)
        parts.append(
            f'<line x1="{MARGIN["left"]}" y1="{_fmt(py)}" x2="{WIDTH - MARGIN["right"]}" '
            f'y2="{_fmt(py)}" stroke="#e6e6ef" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN["left"] - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="Helvetica,Arial,sans-serif" font-size="12" fill="#444455">{ty:g}</text>'
        )
    parts.append(
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" '
        f'width="{WIDTH - MARGIN["left"] - MARGIN["right"]}" '
        f'height="{HEIGHT - MARGIN["top"] - MARGIN["bottom"]}" '
        f'fill="none" stroke="#333344" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 14}" text-anchor="middle" '
        f'font-family="Helvetica,Arial,sans-serif" font-size="13" fill="#222233">dimension d</text>'
    )
    parts.append(
        f'<text x="20" y="{HEIGHT / 2:.0f}" text-anchor="middle" '
        f'font-family="Helvetica,Arial,sans-serif" font-size="13" fill="#222233" '
        f'transform="rotate(-90 20 {HEIGHT / 2:.0f})">copies n</text>'
    )

    if reference is not None:
        a_r, c_r, b_r = reference
        label = REFERENCE_LABEL.get(round(c_r, 6), f"d^{c_r:g}")
        parts.append(
            f'<polyline class="reference-curve" fill="none" stroke="#c0392b" '
            f'stroke-width="1.6" stroke-dasharray="7,5" '
            f'points="{_polyline(axes, a_r, c_r, b_r, x_lo, x_hi)}"/>'
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN["right"] - 8}" y="{MARGIN["top"] + 40}" text-anchor="end" '
            f'font-family="Helvetica,Arial,sans-serif" font-size="12" fill="#c0392b">'
            f"reference {a_r:.2f} {label} + {b_r:.2f}</text>"
        )
    a_f, c_f, b_f = best
    parts.append(
        f'<polyline class="fit-curve" fill="none" stroke="#2c5282" stroke-width="2" '
        f'points="{_polyline(axes, a_f, c_f, b_f, x_lo, x_hi)}"/>'
    )
    parts.append(
        f'<text x="{WIDTH - MARGIN["right"] - 8}" y="{MARGIN["top"] + 22}" text-anchor="end" '
        f'font-family="Helvetica,Arial,sans-serif" font-size="12" fill="#2c5282">'
        f"best fit {a_f:.2f} d^{c_f:.2f} + {b_f:.2f}</text>"
    )
    for x, y in points:
        parts.append(
            f'<circle class="scan-point" cx="{_fmt(axes.px(x))}" cy="{_fmt(axes.py(y))}" '
            f'r="4" fill="#2c5282" fill-opacity="0.85" stroke="#ffffff" stroke-width="1"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def render(spec: FigureSpec) -> str:
    """Render the figure and write it atomically; returns the output path."""
    svg = render_svg(spec)
    out_dir = os.path.dirname(os.path.abspath(spec.output)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".figrender-", suffix=".svg", dir=out_dir)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(svg)
        os.replace(tmp, spec.output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return spec.output
