"""Minimal deterministic PNG encoder (8-bit RGBA, no interlace).

Delegating to an external compressor would tie golden bytes to that
library's version, so the deflate stream is produced here with a fully
pinned algorithm:

* scanline filters: row 0 uses Sub, all other rows use Up;
* one fixed-Huffman deflate block; the only backreferences are
  distance-1 runs (RLE): a run of L >= 4 equal bytes becomes one
  literal, (L-1) // 258 copies of a 258-byte match, then the remainder
  as one match (if >= 3) or literals;
* standard zlib wrapper (header 78 01, Adler-32 trailer).

Any RFC-1950/1951 inflater can decode the result; only the encoder's
byte output is pinned.
"""

from __future__ import annotations

import binascii
import os
import struct
import zlib

import numpy as np

_PNG_SIG = b"\x89PNG\r\n\x1a\n"

try:
    if os.environ.get("XRCA_NO_NUMBA") == "1":
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via XRCA_NO_NUMBA
    HAVE_NUMBA = False


def _reverse_bits(value: int, nbits: int) -> int:
    out = 0
    for _ in range(nbits):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


def _build_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    lit_val = np.zeros(256, dtype=np.uint32)
    lit_nb = np.zeros(256, dtype=np.uint8)
    for v in range(256):
        if v < 144:
            lit_val[v] = _reverse_bits(0x30 + v, 8)
            lit_nb[v] = 8
        else:
            lit_val[v] = _reverse_bits(0x190 + (v - 144), 9)
            lit_nb[v] = 9
    # length code table: (first length, extra bits) per code 257..285
    bases = [
        (3, 0), (4, 0), (5, 0), (6, 0), (7, 0), (8, 0), (9, 0), (10, 0),
        (11, 1), (13, 1), (15, 1), (17, 1),
        (19, 2), (23, 2), (27, 2), (31, 2),
        (35, 3), (43, 3), (51, 3), (59, 3),
        (67, 4), (83, 4), (99, 4), (115, 4),
        (131, 5), (163, 5), (195, 5), (227, 5),
        (258, 0),
    ]
    match_val = np.zeros(259, dtype=np.uint32)
    match_nb = np.zeros(259, dtype=np.uint8)
    for length in range(3, 259):
        ci = 0
        for i, (base, _) in enumerate(bases):
            if base <= length:
                ci = i
        base, extra = bases[ci]
        code = 257 + ci
        if code <= 279:
            huff, hbits = code - 256, 7
        else:
            huff, hbits = 0xC0 + (code - 280), 8
        val = _reverse_bits(huff, hbits) | ((length - base) << hbits)
        nb = hbits + extra + 5  # distance code 1 = five zero bits
        match_val[length] = val
        match_nb[length] = nb
    return lit_val, lit_nb, match_val, match_nb


_LIT_VAL, _LIT_NB, _MATCH_VAL, _MATCH_NB = _build_tables()


def _deflate_numpy(data: np.ndarray) -> bytes:
    n = data.size
    if n == 0:
        bits = np.zeros(16, dtype=np.uint8)
        bits[0] = 1  # BFINAL
        bits[1] = 1  # BTYPE=01
        return np.packbits(bits[:10], bitorder="little").tobytes()

    change = np.flatnonzero(data[1:] != data[:-1])
    starts = np.concatenate([[0], change + 1]).astype(np.int64)
    lengths = np.diff(np.append(starts, n))
    values = data[starts].astype(np.int64)

    long = lengths >= 4
    head = np.where(long, 1, lengths)
    body = np.where(long, lengths - 1, 0)
    m_full = body // 258
    rem = body % 258
    has_rem = (long & (rem >= 3)).astype(np.int64)
    tail = np.where(long & (rem < 3), rem, 0)

    per_run = head + m_full + has_rem + tail
    off = np.concatenate([[0], np.cumsum(per_run)]).astype(np.int64)
    total = int(off[-1])
    tok_val = np.zeros(total, dtype=np.uint32)
    tok_nb = np.zeros(total, dtype=np.uint8)

    def _place(run_idx, base_off, counts, val_of):
        reps = np.repeat(run_idx, counts[run_idx])
        within = np.arange(reps.size) - np.repeat(
            np.concatenate([[0], np.cumsum(counts[run_idx])[:-1]]), counts[run_idx]
        )
        pos = base_off[reps] + within
        tok_val[pos] = val_of(reps)
        tok_nb[pos] = _nb_of(reps)

    idx = np.arange(starts.size)
    # head literals
    _nb_of = lambda reps: _LIT_NB[values[reps]]  # noqa: E731
    _place(idx, off[:-1], head, lambda reps: _LIT_VAL[values[reps]])
    # full 258-byte matches
    m_idx = idx[m_full > 0]
    if m_idx.size:
        _nb_of = lambda reps: np.full(reps.size, _MATCH_NB[258], dtype=np.uint8)  # noqa: E731
        _place(m_idx, (off[:-1] + head), m_full, lambda reps: np.full(reps.size, _MATCH_VAL[258], dtype=np.uint32))
    # remainder matches
    r_idx = idx[has_rem.astype(bool)]
    if r_idx.size:
        pos = (off[:-1] + head + m_full)[r_idx]
        tok_val[pos] = _MATCH_VAL[rem[r_idx]]
        tok_nb[pos] = _MATCH_NB[rem[r_idx]]
    # tail literals
    t_idx = idx[tail > 0]
    if t_idx.size:
        _nb_of = lambda reps: _LIT_NB[values[reps]]  # noqa: E731
        _place(t_idx, (off[:-1] + head + m_full), tail, lambda reps: _LIT_VAL[values[reps]])

    nb64 = tok_nb.astype(np.int64)
    starts_bits = 3 + np.concatenate([[0], np.cumsum(nb64)[:-1]])
    total_bits = 3 + int(nb64.sum()) + 7  # header + tokens + end-of-block
    bits = np.zeros(total_bits, dtype=np.uint8)
    bits[0] = 1  # BFINAL
    bits[1] = 1  # BTYPE = 01 (fixed), LSB first
    for j in range(18):
        m = tok_nb > j
        if not m.any():
            break
        bits[starts_bits[m] + j] = (tok_val[m] >> j) & 1
    return np.packbits(bits, bitorder="little").tobytes()


if HAVE_NUMBA:

    @_njit(cache=True)
    def _deflate_kernel(data, out, lit_val, lit_nb, match_val, match_nb):  # pragma: no cover - numba
        bitpos = 0
        # block header: BFINAL=1, BTYPE=01
        out[0] = 0b011
        bitpos = 3
        i = 0
        n = data.shape[0]
        while i < n:
            v = data[i]
            j = i + 1
            while j < n and data[j] == v:
                j += 1
            run = j - i
            lv = np.int64(lit_val[v])
            ln = np.int64(lit_nb[v])
            if run >= 4:
                nlit_head, body = 1, run - 1
            else:
                nlit_head, body = run, 0
            for _ in range(nlit_head):
                b = bitpos >> 3
                acc = lv << (bitpos & 7)
                out[b] |= acc & 0xFF
                out[b + 1] |= (acc >> 8) & 0xFF
                out[b + 2] |= (acc >> 16) & 0xFF
                bitpos += ln
            while body >= 3:
                m = 258 if body > 258 else body
                mv = np.int64(match_val[m])
                mn = np.int64(match_nb[m])
                b = bitpos >> 3
                acc = mv << (bitpos & 7)
                out[b] |= acc & 0xFF
                out[b + 1] |= (acc >> 8) & 0xFF
                out[b + 2] |= (acc >> 16) & 0xFF
                out[b + 3] |= (acc >> 24) & 0xFF
                bitpos += mn
                body -= m
            for _ in range(body):
                b = bitpos >> 3
                acc = lv << (bitpos & 7)
                out[b] |= acc & 0xFF
                out[b + 1] |= (acc >> 8) & 0xFF
                out[b + 2] |= (acc >> 16) & 0xFF
                bitpos += ln
            i = j
        bitpos += 7  # end-of-block: seven zero bits
        return (bitpos + 7) >> 3


def _deflate(data: np.ndarray) -> bytes:
    if HAVE_NUMBA and data.size:
        out = np.zeros(data.size * 2 + 64, dtype=np.uint8)
        nbytes = _deflate_kernel(data, out, _LIT_VAL, _LIT_NB, _MATCH_VAL, _MATCH_NB)
        return out[:nbytes].tobytes()
    return _deflate_numpy(data)


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = binascii.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def filter_scanlines(rgba: np.ndarray) -> np.ndarray:
    """PNG-filter an (H, W, 4) image: row 0 Sub, other rows Up."""
    h, w = rgba.shape[:2]
    raw = rgba.reshape(h, w * 4)
    out = np.empty((h, w * 4 + 1), dtype=np.uint8)
    out[0, 0] = 1  # Sub
    out[1:, 0] = 2  # Up
    out[0, 1:5] = raw[0, :4]
    out[0, 5:] = raw[0, 4:] - raw[0, :-4]
    out[1:, 1:] = raw[1:] - raw[:-1]
    return out


def encode_png(rgba: np.ndarray) -> bytes:
    """Encode an (H, W, 4) uint8 array as a deterministic PNG."""
    if rgba.dtype != np.uint8 or rgba.ndim != 3 or rgba.shape[2] != 4:
        raise ValueError("expected an (H, W, 4) uint8 array")
    h, w = rgba.shape[:2]
    filtered = np.ascontiguousarray(filter_scanlines(rgba)).ravel()
    stream = b"\x78\x01" + _deflate(filtered) + struct.pack(
        ">I", zlib.adler32(filtered.tobytes()) & 0xFFFFFFFF
    )
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 6, 0, 0, 0)
    return (
        _PNG_SIG
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", stream)
        + _chunk(b"IEND", b"")
    )


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNGs produced by encode_png (test oracle via stdlib zlib)."""
    if data[:8] != _PNG_SIG:
        raise ValueError("not a PNG")
    pos = 8
    width = height = None
    idat = b""
    while pos < len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        tag = data[pos + 4 : pos + 8]
        payload = data[pos + 8 : pos + 8 + length]
        if tag == b"IHDR":
            width, height, depth, ctype = struct.unpack(">IIBB", payload[:10])
            if depth != 8 or ctype != 6:
                raise ValueError("unsupported PNG flavor")
        elif tag == b"IDAT":
            idat += payload
        pos += 12 + length
    raw = np.frombuffer(zlib.decompress(idat), dtype=np.uint8)
    raw = raw.reshape(height, width * 4 + 1)
    out = np.empty((height, width * 4), dtype=np.uint8)
    for y in range(height):
        ftype = raw[y, 0]
        line = raw[y, 1:]
        if ftype == 0:
            out[y] = line
        elif ftype == 1:
            acc = line.copy()
            for x in range(4, acc.size):
                acc[x] = (int(acc[x]) + int(acc[x - 4])) & 0xFF
            out[y] = acc
        elif ftype == 2:
            out[y] = line + out[y - 1]
        else:
            raise ValueError(f"unsupported filter {ftype}")
    return out.reshape(height, width, 4)
