"""SVG 1.1 emission for Sankey layouts.

Byte-deterministic: centipixel geometry prints with exactly two decimal
places and element order is fixed (rects, ribbons, labels).
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .layout import CP, LABEL_COLOR, SankeyLayout


def _fmt(cp: int) -> str:
    sign = "-" if cp < 0 else ""
    cp = abs(cp)
    return f"{sign}{cp // CP}.{cp % CP:02d}"


def _hex(color: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*color)


def render_svg(layout: SankeyLayout) -> bytes:
    w_cp = layout.width_px * CP
    h_cp = layout.height_px * CP
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{layout.width_px}" '
        f'height="{layout.height_px}" viewBox="0 0 {layout.width_px} {layout.height_px}">\n',
        f'<rect x="0.00" y="0.00" width="{_fmt(w_cp)}" height="{_fmt(h_cp)}" fill="#ffffff"/>\n',
    ]
    for r in layout.node_rects:
        parts.append(
            f'<rect x="{_fmt(r.x)}" y="{_fmt(r.y)}" width="{_fmt(r.w)}" '
            f'height="{_fmt(r.h)}" fill="{_hex(r.color)}"/>\n'
        )
    for s in layout.swatches:
        parts.append(
            f'<rect x="{_fmt(s.x)}" y="{_fmt(s.y)}" width="{_fmt(s.size)}" '
            f'height="{_fmt(s.size)}" fill="{_hex(s.color)}"/>\n'
        )
    for rb in layout.ribbons:
        xm = (rb.src_x + rb.dst_x) // 2
        d = (
            f"M {_fmt(rb.src_x)} {_fmt(rb.src_y0)} "
            f"C {_fmt(xm)} {_fmt(rb.src_y0)} {_fmt(xm)} {_fmt(rb.dst_y0)} "
            f"{_fmt(rb.dst_x)} {_fmt(rb.dst_y0)} "
            f"L {_fmt(rb.dst_x)} {_fmt(rb.dst_y1)} "
            f"C {_fmt(xm)} {_fmt(rb.dst_y1)} {_fmt(xm)} {_fmt(rb.src_y1)} "
            f"{_fmt(rb.src_x)} {_fmt(rb.src_y1)} Z"
        )
        parts.append(f'<path d="{d}" fill="{_hex(rb.color)}" fill-opacity="0.45"/>\n')
    fill = _hex(LABEL_COLOR)
    for t in layout.labels:
        anchor = "" if t.anchor == "start" else f' text-anchor="{t.anchor}"'
        parts.append(
            f'<text x="{_fmt(t.x)}" y="{_fmt(t.y)}" font-family="monospace" '
            f'font-size="{t.size_px}.00" fill="{fill}"{anchor}>{escape(t.text)}</text>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts).encode("utf-8")
