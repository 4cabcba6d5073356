#!/usr/bin/env python3
"""Bake a Unifont-style .hex bitmap font from a TTF.

One-time developer tool: rasterizes every codepoint in 0x0000-0x2FFF with
Pillow at a pixel size that fits a 16-row cell, binarizes at 128, and emits
`XXXX:HEXDATA` lines (8- or 16-px-wide cells chosen by advance width).
The committed asset makes runtime rendering independent of any system
font stack.

Codepoints whose rendering equals the font's .notdef box are treated as
uncovered. Blank renderings are kept only for whitespace codepoints.

Usage:
    python scripts/build_font_asset.py --ttf /usr/share/fonts/truetype/dejavu/DejaVuSans.ttf \
        --out src/legit/assets/builtin16.hex
"""

import argparse
import math
import sys

import numpy as np
from PIL import Image, ImageDraw, ImageFont

CELL_ROWS = 16
RANGE_LO, RANGE_HI = 0x0000, 0x2FFF
NOTDEF_PROBE = 0x0378  # permanently unassigned in the BMP


def pick_size(path: str) -> tuple[ImageFont.FreeTypeFont, int]:
    """Largest pixel size whose ascent+descent fits the 16-row cell."""
    best = None
    for size in range(8, 20):
        font = ImageFont.truetype(path, size)
        asc, desc = font.getmetrics()
        if asc + desc <= CELL_ROWS:
            best = (font, asc)
    if best is None:
        raise SystemExit("font does not fit a 16-row cell at any probed size")
    return best


def render_cell(font, ascent: int, ch: str, width: int) -> np.ndarray:
    img = Image.new("L", (width, CELL_ROWS), 0)
    ImageDraw.Draw(img).text((0, ascent), ch, fill=255, font=font, anchor="ls")
    return np.asarray(img) >= 128


def center_ink(cell: np.ndarray) -> np.ndarray:
    """Center the ink span horizontally in its cell (Unifont convention);
    vertical position stays on the baseline."""
    cols = np.flatnonzero(cell.any(axis=0))
    if cols.size == 0:
        return cell
    span = cell[:, cols[0]:cols[-1] + 1]
    out = np.zeros_like(cell)
    x0 = (cell.shape[1] - span.shape[1]) // 2
    out[:, x0:x0 + span.shape[1]] = span
    return out


def cell_to_hex(cell: np.ndarray) -> str:
    bits = np.packbits(cell, axis=1)
    return bits.tobytes().hex().upper()


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ttf", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--lo", type=lambda s: int(s, 0), default=RANGE_LO)
    ap.add_argument("--hi", type=lambda s: int(s, 0), default=RANGE_HI)
    args = ap.parse_args()

    font, ascent = pick_size(args.ttf)
    notdef16 = render_cell(font, ascent, chr(NOTDEF_PROBE), 16)
    notdef8 = render_cell(font, ascent, chr(NOTDEF_PROBE), 8)

    lines = []
    kept = blank_ws = skipped = 0
    for cp in range(args.lo, args.hi + 1):
        ch = chr(cp)
        try:
            advance = font.getlength(ch)
        except Exception:
            skipped += 1
            continue
        width = 8 if math.ceil(advance) <= 8 else 16
        cell = render_cell(font, ascent, ch, width)
        # uncovered codepoints render the .notdef box
        if np.array_equal(cell, notdef16 if width == 16 else notdef8) and cp != NOTDEF_PROBE:
            probe = render_cell(font, ascent, ch + ch, width)  # doubled notdef confirms fallback
            if np.array_equal(probe[:, :width], cell):
                skipped += 1
                continue
        if cp == NOTDEF_PROBE:
            skipped += 1
            continue
        if not cell.any():
            if not ch.isspace():
                skipped += 1
                continue
            blank_ws += 1
        kept += 1
        lines.append(f"{cp:04X}:{cell_to_hex(center_ink(cell))}")

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}: {kept} glyphs ({blank_ws} blank whitespace), {skipped} skipped", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
