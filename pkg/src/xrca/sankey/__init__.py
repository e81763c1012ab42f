"""Deterministic Sankey rendering: layout geometry, SVG and PNG."""

from __future__ import annotations

from .layout import (
    DEFAULT_PALETTE,
    CanvasTooSmall,
    LayoutConfig,
    SankeyLayout,
    build_layout,
    color_for,
)
from .png import decode_png, encode_png
from .raster import rasterize
from .summary import ColumnPairSummary, TransitionStat, flowgraph_summary
from .svg import render_svg


def render_png(layout: SankeyLayout) -> bytes:
    """Rasterize a layout and encode it as a deterministic PNG."""
    return encode_png(rasterize(layout))


__all__ = [
    "DEFAULT_PALETTE",
    "CanvasTooSmall",
    "ColumnPairSummary",
    "LayoutConfig",
    "SankeyLayout",
    "TransitionStat",
    "build_layout",
    "color_for",
    "decode_png",
    "encode_png",
    "flowgraph_summary",
    "rasterize",
    "render_png",
    "render_svg",
]
