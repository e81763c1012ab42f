"""Deterministic Sankey geometry.

All geometry is computed in 1/100-pixel integer units ("centipixels")
so a layout is bit-identical across platforms and floating-point modes.
Columns are placed at equal horizontal spacing between the margins;
nodes stack top-down in canonical FlowGraph order; ribbon anchor spans
tile each node side exactly (prefix rounding, no drift).
"""

from __future__ import annotations

from dataclasses import dataclass

from .._rng import fnv1a64
from ..engine import FlowGraph

CP = 100  # centipixels per pixel

DEFAULT_PALETTE = (
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
    (188, 189, 34),
    (23, 190, 207),
    (174, 199, 232),
    (255, 187, 120),
)

LABEL_COLOR = (51, 51, 51)
RIBBON_ALPHA = 115  # ~0.45 over 255


class CanvasTooSmall(Exception):
    """The canvas cannot satisfy margins, gaps and min node height."""


@dataclass(frozen=True, slots=True)
class LayoutConfig:
    canvas_width_px: int = 1200
    canvas_height_px: int = 800
    node_width_px: int = 24
    node_gap_px: int = 12
    margin_px: int = 40
    min_node_height_px: int = 4
    palette: tuple[tuple[int, int, int], ...] = DEFAULT_PALETTE

    def validate(self) -> None:
        for name in (
            "canvas_width_px",
            "canvas_height_px",
            "node_width_px",
            "node_gap_px",
            "margin_px",
            "min_node_height_px",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.palette:
            raise ValueError("palette must not be empty")


@dataclass(frozen=True, slots=True)
class NodeRect:
    col: int
    value: str
    count: int
    x: int  # centipixels
    y: int
    w: int
    h: int
    color: tuple[int, int, int]
    label: str


@dataclass(frozen=True, slots=True)
class Ribbon:
    src_node: int
    dst_node: int
    count: int
    src_x: int  # right edge of the source node
    src_y0: int
    src_y1: int
    dst_x: int  # left edge of the target node
    dst_y0: int
    dst_y1: int
    color: tuple[int, int, int]


@dataclass(frozen=True, slots=True)
class Swatch:
    value: str
    x: int
    y: int
    size: int
    color: tuple[int, int, int]


@dataclass(frozen=True, slots=True)
class TextLabel:
    x: int
    y: int  # baseline
    text: str
    anchor: str  # start | middle | end
    size_px: int


@dataclass(frozen=True, slots=True)
class SankeyLayout:
    width_px: int
    height_px: int
    node_rects: tuple[NodeRect, ...]  # aligned with FlowGraph.nodes
    ribbons: tuple[Ribbon, ...]  # canonical flow order (painter order)
    column_x: tuple[int, ...]
    column_labels: tuple[str, ...]
    swatches: tuple[Swatch, ...]
    labels: tuple[TextLabel, ...]
    cohort_size: int


def color_for(value: str, palette: tuple[tuple[int, int, int], ...]) -> tuple[int, int, int]:
    """Stable palette assignment so a value keeps its color across queries."""
    return palette[fnv1a64(value.encode("utf-8")) % len(palette)]


def _divround(a: int, b: int) -> int:
    # round-half-up for non-negative a
    return (a + b // 2) // b


def _prefix_bounds(total_units: int, counts: list[int]) -> list[int]:
    """Boundaries that split total_units proportionally to counts with
    exact tiling (prefix rounding)."""
    cum = 0
    total = sum(counts)
    bounds = [0]
    for c in counts:
        cum += c
        bounds.append(_divround(total_units * cum, total))
    return bounds


def build_layout(g: FlowGraph, cfg: LayoutConfig | None = None) -> SankeyLayout:
    """Resolve a FlowGraph into Sankey geometry. Pure function of (g, cfg)."""
    cfg = cfg or LayoutConfig()
    cfg.validate()

    width = cfg.canvas_width_px * CP
    height = cfg.canvas_height_px * CP
    margin = cfg.margin_px * CP
    node_w = cfg.node_width_px * CP
    gap = cfg.node_gap_px * CP
    min_h = cfg.min_node_height_px * CP

    usable_w = width - 2 * margin
    usable_h = height - 2 * margin
    ncols = len(g.columns)
    if usable_w <= 0 or usable_h <= 0:
        raise CanvasTooSmall("margins exceed canvas dimensions")
    if usable_w < ncols * node_w:
        raise CanvasTooSmall("canvas too narrow for all columns")

    column_x = tuple(
        margin + (_divround(c * (usable_w - node_w), ncols - 1) if ncols > 1 else (usable_w - node_w) // 2)
        for c in range(ncols)
    )

    per_column: list[list[int]] = [[] for _ in range(ncols)]
    for i, n in enumerate(g.nodes):
        per_column[n.col].append(i)

    node_rects: list[NodeRect | None] = [None] * len(g.nodes)
    for c, node_ids in enumerate(per_column):
        k = len(node_ids)
        if k == 0:
            continue
        avail = usable_h - gap * (k - 1)
        if avail <= 0:
            raise CanvasTooSmall(f"column {c}: gaps exceed usable height")
        counts = [g.nodes[i].count for i in node_ids]
        bounds = _prefix_bounds(avail, counts)
        for j, i in enumerate(node_ids):
            h = bounds[j + 1] - bounds[j]
            if h < min_h:
                raise CanvasTooSmall(
                    f"column {c}: node height {h / CP:.2f}px below minimum"
                )
            node = g.nodes[i]
            node_rects[i] = NodeRect(
                col=c,
                value=node.value,
                count=node.count,
                x=column_x[c],
                y=margin + bounds[j] + gap * j,
                w=node_w,
                h=h,
                color=color_for(node.value, cfg.palette),
                label=f"{node.value} ({node.count})",
            )
    rects: list[NodeRect] = [r for r in node_rects if r is not None]
    assert len(rects) == len(g.nodes)

    # Anchor spans: subdivide each node side among its flows by prefix
    # rounding. Outbound spans follow canonical flow order; inbound
    # spans stack by source node index.
    out_spans: dict[int, tuple[int, int]] = {}
    by_source: dict[int, list[int]] = {}
    by_target: dict[int, list[int]] = {}
    for fi, f in enumerate(g.flows):
        by_source.setdefault(f.source, []).append(fi)
        by_target.setdefault(f.target, []).append(fi)
    for node_id, flow_ids in by_source.items():
        rect = rects[node_id]
        bounds = _prefix_bounds(rect.h, [g.flows[fi].count for fi in flow_ids])
        for j, fi in enumerate(flow_ids):
            out_spans[fi] = (rect.y + bounds[j], rect.y + bounds[j + 1])
    in_spans: dict[int, tuple[int, int]] = {}
    for node_id, flow_ids in by_target.items():
        rect = rects[node_id]
        ordered = sorted(flow_ids, key=lambda fi: (g.flows[fi].source, g.flows[fi].target))
        bounds = _prefix_bounds(rect.h, [g.flows[fi].count for fi in ordered])
        for j, fi in enumerate(ordered):
            in_spans[fi] = (rect.y + bounds[j], rect.y + bounds[j + 1])

    ribbons = []
    for fi, f in enumerate(g.flows):
        src, dst = rects[f.source], rects[f.target]
        sy0, sy1 = out_spans[fi]
        ty0, ty1 = in_spans[fi]
        ribbons.append(
            Ribbon(
                src_node=f.source,
                dst_node=f.target,
                count=f.count,
                src_x=src.x + src.w,
                src_y0=sy0,
                src_y1=sy1,
                dst_x=dst.x,
                dst_y0=ty0,
                dst_y1=ty1,
                color=src.color,
            )
        )

    # Legend: one swatch per distinct value, laid along the bottom
    # margin; entries that would cross the right margin are dropped.
    swatches: list[Swatch] = []
    legend_labels: list[TextLabel] = []
    sw = 10 * CP
    x_cursor = margin
    y_sw = height - margin + (margin - sw) // 2
    for value in sorted({n.value for n in g.nodes}):
        advance = sw + 4 * CP + len(value) * 7 * CP + 14 * CP
        if x_cursor + advance > width - margin:
            break
        swatches.append(Swatch(value, x_cursor, y_sw, sw, color_for(value, cfg.palette)))
        legend_labels.append(
            TextLabel(x_cursor + sw + 4 * CP, y_sw + 850, value, "start", 11)
        )
        x_cursor += advance

    labels: list[TextLabel] = []
    for c, name in enumerate(g.columns):
        labels.append(
            TextLabel(column_x[c] + node_w // 2, margin - 8 * CP, name, "middle", 14)
        )
    for rect in rects:
        mid_y = rect.y + rect.h // 2 + 4 * CP
        if rect.col < ncols - 1:
            labels.append(TextLabel(rect.x + rect.w + 6 * CP, mid_y, rect.label, "start", 12))
        else:
            labels.append(TextLabel(rect.x - 6 * CP, mid_y, rect.label, "end", 12))
    labels.extend(legend_labels)

    return SankeyLayout(
        width_px=cfg.canvas_width_px,
        height_px=cfg.canvas_height_px,
        node_rects=tuple(rects),
        ribbons=tuple(ribbons),
        column_x=column_x,
        column_labels=g.columns,
        swatches=tuple(swatches),
        labels=tuple(labels),
        cohort_size=g.cohort_size,
    )
