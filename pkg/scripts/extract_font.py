#!/usr/bin/env python3
"""Regenerate src/visprompt/render/_fontdata.py from Pillow's bundled font.

One-off build tool: the rendered package never imports Pillow. Each ASCII
glyph (32..126) is rasterized without anti-aliasing and stored as an
(advance, row-bitmask) pair so plot text is bit-identical everywhere.
"""

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

TILE_W, TILE_H = 16, 14
ROW_TOP, ROW_BOT = 1, 11  # observed glyph extent for the bundled font

OUT = Path(__file__).resolve().parents[1] / "src" / "visprompt" / "render" / "_fontdata.py"


def main() -> None:
    font = ImageFont.load_default()
    glyphs: dict[str, tuple[int, tuple[int, ...]]] = {}
    for code in range(32, 127):
        ch = chr(code)
        img = Image.new("L", (TILE_W, TILE_H), 0)
        draw = ImageDraw.Draw(img)
        draw.fontmode = "1"
        draw.text((0, 0), ch, fill=255, font=font)
        arr = (np.asarray(img) > 127)[ROW_TOP : ROW_BOT + 1]
        rows = []
        for row in arr:
            bits = 0
            for col, on in enumerate(row):
                if on:
                    bits |= 1 << col
            rows.append(bits)
        advance = int(round(font.getlength(ch)))
        glyphs[ch] = (max(advance, 1), tuple(rows))

    lines = [
        '"""Packed bitmap font (generated by scripts/extract_font.py; do not edit).',
        "",
        "Each glyph maps to (advance_px, row_masks) where bit i of a row mask is",
        "pixel column i. FONT_HEIGHT rows per glyph.",
        '"""',
        "",
        f"FONT_HEIGHT = {ROW_BOT - ROW_TOP + 1}",
        "",
        "GLYPHS = {",
    ]
    for ch, (adv, rows) in glyphs.items():
        lines.append(f"    {ch!r}: ({adv}, {rows!r}),")
    lines.append("}")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT} ({len(glyphs)} glyphs)")


if __name__ == "__main__":
    main()
