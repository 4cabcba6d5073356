"""Deterministic rasterization of Unicode codepoints from a bitmap font.

Glyphs come from a Unifont-style ``.hex`` file: one glyph per line,
``XXXX:DATA`` where ``XXXX`` is the hex codepoint and ``DATA`` is the
row-major hex dump of a 16-row cell (one byte per row for 8px-wide cells,
two for 16px-wide; the MSB is the leftmost pixel). Rendering a codepoint
upscales its cell by an integer factor and centers it on a fixed canvas,
black ink on white, so identical inputs give byte-identical bitmaps on
every platform -- no rasterizer, no anti-aliasing, no hinting.

The repository ships ``assets/builtin16.hex`` baked from DejaVu Sans (see
``scripts/build_font_asset.py``); a real GNU Unifont ``unifont.hex`` is a
drop-in replacement.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import FormatError, UnknownCodepoint, Unrenderable

CODEPOINT_MIN = 0x0000
CODEPOINT_MAX = 0x2FFF
CELL_ROWS = 16  # .hex cells are always 16 rows tall
INK = 0  # foreground byte value
BACKGROUND = 255

BUILTIN_FONT = "builtin16.hex"


def builtin_font_path() -> Path:
    """Path of the font asset shipped with the package."""
    return Path(str(resources.files("legit") / "assets" / BUILTIN_FONT))


@dataclass(frozen=True)
class FontConfig:
    """Rendering parameters. Rendering is a pure function of (codepoint, config)."""

    font_file: str | Path
    glyph_px: int = 144
    canvas_w: int = 224
    canvas_h: int = 224

    def __post_init__(self):
        if self.glyph_px <= 0 or self.canvas_w <= 0 or self.canvas_h <= 0:
            raise ValueError("glyph_px and canvas dimensions must be positive")
        if self.glyph_px > min(self.canvas_w, self.canvas_h):
            raise ValueError("glyph_px must not exceed the canvas")
        if self.glyph_px % CELL_ROWS != 0:
            raise ValueError(f"glyph_px must be a multiple of {CELL_ROWS} for exact integer scaling")

    @property
    def scale(self) -> int:
        return self.glyph_px // CELL_ROWS


@dataclass
class GlyphBitmap:
    """Fixed-format grayscale raster; 0 is ink, 255 is background.

    ``codepoint`` is None for string renders.
    """

    width: int
    height: int
    pixels: np.ndarray  # uint8, shape (height, width), read-only
    codepoint: int | None = None

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width):
            raise ValueError("pixel buffer does not match declared dimensions")

    @property
    def ink_count(self) -> int:
        return int((self.pixels < 128).sum())

    @property
    def is_blank(self) -> bool:
        return self.ink_count == 0

    def ink_mask(self) -> np.ndarray:
        """Boolean mask, True where a pixel is foreground."""
        return self.pixels < 128

    def to_pgm(self) -> bytes:
        """Binary PGM (P5); the canonical byte-exact export."""
        header = f"P5\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + self.pixels.tobytes()

    def to_png(self) -> bytes:
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="L").save(buf, format="PNG")
        return buf.getvalue()


@dataclass(frozen=True)
class CodepointSet:
    """Strictly ascending codepoints that render with at least one ink pixel."""

    codepoints: tuple[int, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        cps = self.codepoints
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("codepoints must be strictly ascending")
        object.__setattr__(self, "_index", {cp: i for i, cp in enumerate(cps)})

    def __len__(self) -> int:
        return len(self.codepoints)

    def __iter__(self):
        return iter(self.codepoints)

    def __contains__(self, cp: int) -> bool:
        return cp in self._index

    def index_of(self, cp: int) -> int:
        try:
            return self._index[cp]
        except KeyError:
            raise UnknownCodepoint(cp) from None


class GlyphFont:
    """Parsed .hex font: an immutable codepoint -> boolean cell mapping."""

    def __init__(self, cells: dict[int, np.ndarray], source: str = "<memory>"):
        self.source = source
        self._cells = cells
        for arr in cells.values():
            arr.setflags(write=False)

    @classmethod
    def load(cls, path: str | Path) -> "GlyphFont":
        path = Path(path)
        return cls.from_text(path.read_text(encoding="utf-8"), source=str(path))

    @classmethod
    def from_text(cls, text: str, source: str = "<memory>") -> "GlyphFont":
        cells: dict[int, np.ndarray] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                cp_hex, data = line.split(":", 1)
                cp = int(cp_hex, 16)
            except ValueError as e:
                raise FormatError(f"{source}:{lineno}: malformed .hex line") from e
            if len(data) % (2 * CELL_ROWS) != 0 or not data:
                raise FormatError(
                    f"{source}:{lineno}: glyph data length {len(data)} "
                    f"not a positive multiple of {2 * CELL_ROWS}")
            bytes_per_row = len(data) // (2 * CELL_ROWS)
            try:
                raw = bytes.fromhex(data)
            except ValueError as e:
                raise FormatError(f"{source}:{lineno}: non-hex glyph data") from e
            rows = np.frombuffer(raw, dtype=np.uint8).reshape(CELL_ROWS, bytes_per_row)
            cells[cp] = np.unpackbits(rows, axis=1).astype(bool)
        return cls(cells, source=source)

    def __len__(self) -> int:
        return len(self._cells)

    def coverage(self) -> frozenset[int]:
        return frozenset(self._cells)

    def cell(self, cp: int) -> np.ndarray | None:
        return self._cells.get(cp)


class Atlas:
    """Immutable glyph renderer over one (font, config) pair.

    Safe for concurrent reads; the render cache only ever gains entries
    whose values are deterministic functions of the key.
    """

    def __init__(self, cfg: FontConfig, font: GlyphFont | None = None):
        self.cfg = cfg
        self.font = font if font is not None else GlyphFont.load(cfg.font_file)
        self._cache: dict[int, GlyphBitmap] = {}

    def render_glyph(self, cp: int) -> GlyphBitmap:
        """Rasterize one codepoint onto the canvas, centered.

        Raises Unrenderable if the font lacks the glyph, or if the glyph is
        blank for a non-whitespace codepoint (all-background bitmaps are
        reserved for whitespace).
        """
        cached = self._cache.get(cp)
        if cached is not None:
            return cached
        cell = self.font.cell(cp)
        if cell is None:
            raise Unrenderable(cp)
        if not cell.any() and not chr(cp).isspace():
            raise Unrenderable(cp, "blank glyph for non-whitespace codepoint")
        cfg = self.cfg
        scaled = _upscale(cell, cfg.scale)
        gh, gw = scaled.shape
        if gw > cfg.canvas_w or gh > cfg.canvas_h:
            raise Unrenderable(cp, f"glyph {gw}x{gh} exceeds canvas {cfg.canvas_w}x{cfg.canvas_h}")
        canvas = np.full((cfg.canvas_h, cfg.canvas_w), BACKGROUND, dtype=np.uint8)
        y0 = (cfg.canvas_h - gh) // 2
        x0 = (cfg.canvas_w - gw) // 2
        canvas[y0:y0 + gh, x0:x0 + gw][scaled] = INK
        canvas.setflags(write=False)
        bitmap = GlyphBitmap(width=cfg.canvas_w, height=cfg.canvas_h, pixels=canvas, codepoint=cp)
        self._cache[cp] = bitmap
        return bitmap

    def render_string(self, s: str) -> GlyphBitmap:
        """Concatenate glyph cells horizontally at their natural advance widths.

        Height is fixed at canvas_h with each glyph vertically centered;
        width is the sum of the scaled cell widths. The empty string renders
        to a zero-width bitmap. Raises Unrenderable on the first character
        the font cannot draw.
        """
        cfg = self.cfg
        strips = []
        for ch in s:
            cp = ord(ch)
            cell = self.font.cell(cp)
            if cell is None:
                raise Unrenderable(cp)
            if not cell.any() and not ch.isspace():
                raise Unrenderable(cp, "blank glyph for non-whitespace codepoint")
            scaled = _upscale(cell, cfg.scale)
            gh, gw = scaled.shape
            strip = np.full((cfg.canvas_h, gw), BACKGROUND, dtype=np.uint8)
            y0 = (cfg.canvas_h - gh) // 2
            strip[y0:y0 + gh, :][scaled] = INK
            strips.append(strip)
        if strips:
            out = np.concatenate(strips, axis=1)
        else:
            out = np.zeros((cfg.canvas_h, 0), dtype=np.uint8)
        out.setflags(write=False)
        return GlyphBitmap(width=out.shape[1], height=cfg.canvas_h, pixels=out)

    def glyph_width(self, cp: int) -> int:
        """Scaled advance width used by render_string."""
        cell = self.font.cell(cp)
        if cell is None:
            raise Unrenderable(cp)
        return cell.shape[1] * self.cfg.scale

    def build_codepoint_set(self, lo: int = CODEPOINT_MIN, hi: int = CODEPOINT_MAX) -> CodepointSet:
        """Codepoints in [lo, hi] that render successfully with >= 1 ink pixel.

        Whitespace and blank glyphs are excluded -- renderable is not the
        same as substitution candidate. Exclusion is silent, never an error.
        """
        if lo < CODEPOINT_MIN or hi > CODEPOINT_MAX or lo > hi:
            raise ValueError(f"range must satisfy {CODEPOINT_MIN:#06x} <= lo <= hi <= {CODEPOINT_MAX:#06x}")
        kept = [cp for cp in sorted(self.font.coverage())
                if lo <= cp <= hi and self.font.cell(cp).any()]
        return CodepointSet(tuple(kept))


def _upscale(cell: np.ndarray, scale: int) -> np.ndarray:
    if scale == 1:
        return cell
    return np.repeat(np.repeat(cell, scale, axis=0), scale, axis=1)


def load_atlas(font_file: str | Path | None = None, glyph_px: int = 144,
               canvas_w: int = 224, canvas_h: int = 224) -> Atlas:
    """Convenience constructor; defaults to the packaged font asset."""
    path = Path(font_file) if font_file is not None else builtin_font_path()
    return Atlas(FontConfig(font_file=path, glyph_px=glyph_px, canvas_w=canvas_w, canvas_h=canvas_h))
