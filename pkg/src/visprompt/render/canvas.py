"""Integer raster drawing: the deterministic backend behind every plot.

No anti-aliasing, no system fonts, no floating-point rasterization paths:
identical inputs produce identical pixel buffers on any machine. Text uses
the packed bitmap font in ``_fontdata``.
"""

from __future__ import annotations

import numpy as np

from ._fontdata import FONT_HEIGHT, GLYPHS

RGB = tuple[int, int, int]

WHITE: RGB = (255, 255, 255)
BLACK: RGB = (0, 0, 0)


def text_size(s: str, scale: int = 1) -> tuple[int, int]:
    width = sum(GLYPHS.get(ch, GLYPHS["?"])[0] for ch in s)
    return width * scale, FONT_HEIGHT * scale


def text_mask(s: str, scale: int = 1) -> np.ndarray:
    """Boolean (h, w) pixel mask for a text string."""
    width = sum(GLYPHS.get(ch, GLYPHS["?"])[0] for ch in s)
    mask = np.zeros((FONT_HEIGHT, max(1, width + 2)), dtype=bool)
    x = 0
    for ch in s:
        adv, rows = GLYPHS.get(ch, GLYPHS["?"])
        for r, bits in enumerate(rows):
            col = 0
            while bits:
                if bits & 1 and x + col < mask.shape[1]:
                    mask[r, x + col] = True
                bits >>= 1
                col += 1
        x += adv
    if scale > 1:
        mask = np.repeat(np.repeat(mask, scale, axis=0), scale, axis=1)
    return mask


class Canvas:
    """A fixed-size RGB pixel buffer with clipped integer drawing ops."""

    def __init__(self, width: int, height: int, background: RGB = WHITE):
        self.width = int(width)
        self.height = int(height)
        self.buf = np.empty((self.height, self.width, 3), dtype=np.uint8)
        self.buf[:, :] = background

    def to_bytes(self) -> bytes:
        return self.buf.tobytes()

    # -- primitives ------------------------------------------------------

    def fill_rect(self, x0: int, y0: int, x1: int, y1: int, color: RGB) -> None:
        x0, x1 = sorted((int(x0), int(x1)))
        y0, y1 = sorted((int(y0), int(y1)))
        x0, y0 = max(x0, 0), max(y0, 0)
        x1, y1 = min(x1, self.width - 1), min(y1, self.height - 1)
        if x0 <= x1 and y0 <= y1:
            self.buf[y0 : y1 + 1, x0 : x1 + 1] = color

    def pixel_block(self, x: int, y: int, color: RGB, width: int = 1) -> None:
        if width <= 1:
            if 0 <= x < self.width and 0 <= y < self.height:
                self.buf[y, x] = color
        else:
            half = (width - 1) // 2
            self.fill_rect(x - half, y - half, x - half + width - 1, y - half + width - 1, color)

    def line(self, x0: int, y0: int, x1: int, y1: int, color: RGB, width: int = 1) -> None:
        """Bresenham line, optionally thickened into square stamps."""
        x0, y0, x1, y1 = int(x0), int(y0), int(x1), int(y1)
        dx, dy = abs(x1 - x0), -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            self.pixel_block(x0, y0, color, width)
            if x0 == x1 and y0 == y1:
                break
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy

    def polyline(self, points: list[tuple[int, int]], color: RGB, width: int = 1) -> None:
        for (xa, ya), (xb, yb) in zip(points, points[1:]):
            self.line(xa, ya, xb, yb, color, width)

    def disc(self, cx: int, cy: int, radius: int, color: RGB) -> None:
        cx, cy, radius = int(cx), int(cy), int(radius)
        r2 = radius * radius
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                if dx * dx + dy * dy <= r2:
                    x, y = cx + dx, cy + dy
                    if 0 <= x < self.width and 0 <= y < self.height:
                        self.buf[y, x] = color

    def blit_mask(self, x: int, y: int, mask: np.ndarray, color: RGB) -> None:
        h, w = mask.shape
        x0, y0 = max(0, x), max(0, y)
        x1, y1 = min(self.width, x + w), min(self.height, y + h)
        if x0 >= x1 or y0 >= y1:
            return
        sub = mask[y0 - y : y1 - y, x0 - x : x1 - x]
        region = self.buf[y0:y1, x0:x1]
        region[sub] = color

    def text(self, x: int, y: int, s: str, color: RGB = BLACK, scale: int = 1) -> int:
        """Draw text with its top-left corner at (x, y); returns pixel width."""
        mask = text_mask(s, scale)
        self.blit_mask(int(x), int(y), mask, color)
        return mask.shape[1]

    def text_centered(self, cx: int, y: int, s: str, color: RGB = BLACK, scale: int = 1) -> None:
        w, _ = text_size(s, scale)
        self.text(int(cx) - w // 2, y, s, color, scale)

    def text_right(self, x_right: int, y: int, s: str, color: RGB = BLACK, scale: int = 1) -> None:
        w, _ = text_size(s, scale)
        self.text(int(x_right) - w, y, s, color, scale)

    def text_vertical(self, x: int, cy: int, s: str, color: RGB = BLACK, scale: int = 1) -> None:
        """Draw text rotated 90° counter-clockwise, centered vertically on cy."""
        mask = np.rot90(text_mask(s, scale))
        self.blit_mask(int(x), int(cy) - mask.shape[0] // 2, mask, color)
