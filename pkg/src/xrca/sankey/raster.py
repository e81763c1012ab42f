"""Deterministic rasterization of Sankey layouts.

Pinned rules (any change invalidates golden files):

* 4x4 subpixels per output pixel, box filter; a subpixel whose center
  falls inside a half-open centipixel interval [a, b) is covered. With
  subpixel centers at (k + 0.5)/4 px, the covered subunit range is
  [(2a + 24) // 50, (2b + 24) // 50).
* Paint order: white background, node rects (opaque), legend swatches
  (opaque), ribbons (alpha 115/255, canonical flow order), labels
  (opaque bitmap font on the pixel grid, no anti-aliasing).
* Ribbon boundaries are cubic curves with horizontal end tangents and
  mid-gap control points, evaluated per supersample column by integer
  inversion of the curve's x(t) on a 1024-step grid with linear
  interpolation between grid points. All arithmetic is exact int64.
* Coverage 0..16 per pixel; blend weight w = (cov * alpha + 8) // 16;
  channel blend c = (fg * w + bg * (255 - w) + 127) // 255.
"""

from __future__ import annotations

import os

import numpy as np

from .font5x7 import blit_text
from .layout import CP, LABEL_COLOR, RIBBON_ALPHA, Ribbon, SankeyLayout

_GRID_N = 1024
_DEN = _GRID_N**3  # smoothstep denominator
_HALF = _DEN // 2

try:  # optional acceleration; the numpy path is the reference
    if os.environ.get("XRCA_NO_NUMBA") == "1":
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via XRCA_NO_NUMBA
    HAVE_NUMBA = False


def _units(a_cp: int, b_cp: int) -> tuple[int, int]:
    """Subunit (quarter-pixel) index range covered by [a_cp, b_cp)."""
    return (2 * a_cp + 24) // 50, (2 * b_cp + 24) // 50


def _axis_coverage(a_cp: int, b_cp: int, n_px: int) -> tuple[int, np.ndarray]:
    s0, s1 = _units(a_cp, b_cp)
    s0, s1 = max(s0, 0), min(s1, n_px * 4)
    if s1 <= s0:
        return 0, np.empty(0, dtype=np.int64)
    p0, p1 = s0 >> 2, (s1 + 3) >> 2
    base = np.arange(p0, p1, dtype=np.int64) * 4
    cov = np.minimum(s1, base + 4) - np.maximum(s0, base)
    return p0, cov


def _fill_rect(canvas: np.ndarray, x: int, y: int, w: int, h: int,
               color: tuple[int, int, int], alpha: int = 255) -> None:
    height, width = canvas.shape[:2]
    px0, covx = _axis_coverage(x, x + w, width)
    py0, covy = _axis_coverage(y, y + h, height)
    if covx.size == 0 or covy.size == 0:
        return
    cov16 = covy[:, None] * covx[None, :]
    w8 = ((cov16 * alpha + 8) >> 4).astype(np.uint32)[..., None]
    region = canvas[py0 : py0 + covy.size, px0 : px0 + covx.size].astype(np.uint32)
    fg = np.array(color, dtype=np.uint32)
    canvas[py0 : py0 + covy.size, px0 : px0 + covx.size] = (
        (fg * w8 + region * (255 - w8) + 127) // 255
    ).astype(np.uint8)


def _gap_tables(x0_cp: int, x1_cp: int) -> tuple[int, np.ndarray]:
    """Per-gap inversion of the ribbon curve's x(t).

    Returns (first_subcol, winterp) where winterp[i] is the smoothstep
    numerator (over 2**30) at subcolumn first_subcol + i.
    """
    n = _GRID_N
    k = np.arange(n + 1, dtype=np.int64)
    v = 3 * k * n * n - 3 * k * k * n + 2 * k**3  # x-progress * 2n^3
    xnum = 4 * (n**3) * x0_cp + 2 * (x1_cp - x0_cp) * v
    wk = 3 * k * k * n - 2 * k**3  # smoothstep * n^3

    sc0, sc1 = _units(x0_cp, x1_cp)
    sxs = np.arange(sc0, sc1, dtype=np.int64)
    xq = (50 * sxs + 25) * (2 * n**3)
    kk = np.clip(np.searchsorted(xnum, xq, side="right") - 1, 0, n - 1)
    fnum = xq - xnum[kk]
    fden = xnum[kk + 1] - xnum[kk]
    winterp = wk[kk] + (wk[kk + 1] - wk[kk]) * fnum // fden
    return sc0, winterp


def _ribbons_numpy(canvas: np.ndarray, ribbons: list[Ribbon], sc0: int,
                   winterp: np.ndarray, alpha: int) -> None:
    height = canvas.shape[0]
    sxs = np.arange(sc0, sc0 + winterp.size, dtype=np.int64)
    occ_abs = sxs >> 2
    oc0 = int(occ_abs[0])
    ow = int(occ_abs[-1]) - oc0 + 1
    occ = (occ_abs - oc0).astype(np.int64)
    phase = (sxs & 3).astype(np.int64)

    for rb in ribbons:
        yt = rb.src_y0 + ((rb.dst_y0 - rb.src_y0) * winterp + _HALF) // _DEN
        yb = rb.src_y1 + ((rb.dst_y1 - rb.src_y1) * winterp + _HALF) // _DEN
        a = (2 * yt + 24) // 50
        b = (2 * yb + 24) // 50
        valid = b > a
        if not valid.any():
            continue
        pa = a >> 2
        pb = b >> 2
        rmin = int(pa[valid].min())
        rmax = min(int(pb[valid].max()) + 1, height)
        rmin = max(rmin, 0)
        rh = rmax - rmin
        if rh <= 0:
            continue
        d_int = np.zeros((rh + 2, ow), np.int16)
        d_frac = np.zeros((rh + 1, ow), np.int16)
        first = np.minimum(b, (pa + 1) * 4) - a
        frac2 = np.where(pb > pa, b - pb * 4, 0)
        for ph in range(4):
            m = valid & (phase == ph)
            if not m.any():
                continue
            c = occ[m]
            d_frac[pa[m] - rmin, c] += first[m].astype(np.int16)
            d_frac[pb[m] - rmin, c] += frac2[m].astype(np.int16)
            d_int[pa[m] + 1 - rmin, c] += 4
            d_int[np.maximum(pb[m], pa[m] + 1) - rmin, c] -= 4
        cov16 = np.cumsum(d_int[:rh], axis=0) + d_frac[:rh]
        w8 = ((cov16.astype(np.uint32) * alpha + 8) >> 4)[..., None]
        region = canvas[rmin:rmax, oc0 : oc0 + ow].astype(np.uint32)
        fg = np.array(rb.color, dtype=np.uint32)
        canvas[rmin:rmax, oc0 : oc0 + ow] = (
            (fg * w8 + region * (255 - w8) + 127) // 255
        ).astype(np.uint8)


if HAVE_NUMBA:

    @_njit(cache=True)
    def _ribbons_kernel(canvas, sc0, winterp, ry0, ry1, rd0, rd1, colors, alpha):  # pragma: no cover - numba
        height = canvas.shape[0]
        nsub = winterp.shape[0]
        covbuf = np.zeros(height + 1, np.int64)
        den = np.int64(1) << 30
        half = np.int64(1) << 29
        for r in range(ry0.shape[0]):
            a0, a1, d0, d1 = ry0[r], ry1[r], rd0[r], rd1[r]
            cr = np.int64(colors[r, 0])
            cg = np.int64(colors[r, 1])
            cb = np.int64(colors[r, 2])
            s = 0
            while s < nsub:
                x = (sc0 + s) >> 2
                send = ((x + 1) << 2) - sc0
                if send > nsub:
                    send = nsub
                pmin, pmax = height, -1
                for t in range(s, send):
                    w = winterp[t]
                    yt = a0 + ((d0 - a0) * w + half) // den
                    yb = a1 + ((d1 - a1) * w + half) // den
                    ua = (2 * yt + 24) // 50
                    ub = (2 * yb + 24) // 50
                    if ub <= ua:
                        continue
                    pa = ua >> 2
                    pbe = (ub + 3) >> 2
                    if pa < 0:
                        pa = 0
                    if pbe > height:
                        pbe = height
                    for p in range(pa, pbe):
                        lo = p << 2
                        hi = lo + 4
                        if ua > lo:
                            lo = ua
                        if ub < hi:
                            hi = ub
                        covbuf[p] += hi - lo
                    if pa < pmin:
                        pmin = pa
                    if pbe > pmax:
                        pmax = pbe
                for p in range(pmin, pmax):
                    c16 = covbuf[p]
                    if c16 != 0:
                        covbuf[p] = 0
                        w8 = (c16 * alpha + 8) >> 4
                        inv = 255 - w8
                        canvas[p, x, 0] = (cr * w8 + np.int64(canvas[p, x, 0]) * inv + 127) // 255
                        canvas[p, x, 1] = (cg * w8 + np.int64(canvas[p, x, 1]) * inv + 127) // 255
                        canvas[p, x, 2] = (cb * w8 + np.int64(canvas[p, x, 2]) * inv + 127) // 255
                s = send


def _render_gap(canvas: np.ndarray, ribbons: list[Ribbon]) -> None:
    x0, x1 = ribbons[0].src_x, ribbons[0].dst_x
    if x1 <= x0:
        return
    sc0, winterp = _gap_tables(x0, x1)
    if winterp.size == 0:
        return
    if HAVE_NUMBA:
        ry0 = np.array([rb.src_y0 for rb in ribbons], np.int64)
        ry1 = np.array([rb.src_y1 for rb in ribbons], np.int64)
        rd0 = np.array([rb.dst_y0 for rb in ribbons], np.int64)
        rd1 = np.array([rb.dst_y1 for rb in ribbons], np.int64)
        colors = np.array([rb.color for rb in ribbons], np.uint8)
        _ribbons_kernel(canvas, sc0, winterp, ry0, ry1, rd0, rd1, colors, RIBBON_ALPHA)
    else:
        _ribbons_numpy(canvas, ribbons, sc0, winterp, RIBBON_ALPHA)


def rasterize(layout: SankeyLayout) -> np.ndarray:
    """Render a layout to an (H, W, 4) uint8 RGBA array."""
    height, width = layout.height_px, layout.width_px
    canvas = np.full((height, width, 3), 255, np.uint8)

    for r in layout.node_rects:
        _fill_rect(canvas, r.x, r.y, r.w, r.h, r.color)
    for s in layout.swatches:
        _fill_rect(canvas, s.x, s.y, s.size, s.size, s.color)

    gaps: dict[tuple[int, int], list[Ribbon]] = {}
    for rb in layout.ribbons:
        gaps.setdefault((rb.src_x, rb.dst_x), []).append(rb)
    for ribbons in gaps.values():
        _render_gap(canvas, ribbons)

    for t in layout.labels:
        blit_text(
            canvas,
            (t.x + CP // 2) // CP,
            (t.y + CP // 2) // CP,
            t.text,
            t.anchor,
            LABEL_COLOR,
        )

    alpha = np.full((height, width, 1), 255, np.uint8)
    return np.concatenate([canvas, alpha], axis=2)
