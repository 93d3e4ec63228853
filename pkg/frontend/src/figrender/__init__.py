"""Deterministic SVG figures for minimal-copies scan data.

Renders the (d, n_min) scatter of a scan CSV together with the best
power-law fit and the fixed-exponent reference curve from a fit CSV.  All
numbers are taken from the CSVs; nothing is recomputed here.
"""

from figrender.spec import FigureSpec, InvalidInput
from figrender.render import render, render_svg

__all__ = ["FigureSpec", "InvalidInput", "render", "render_svg"]

__version__ = "0.1.0"
