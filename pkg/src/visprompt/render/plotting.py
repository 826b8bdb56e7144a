"""Axes scaffolding on top of the raw canvas: ticks, labels, legends, heatmaps."""

from __future__ import annotations

import math

import numpy as np

from .canvas import BLACK, RGB, Canvas, text_size

GRAY = (150, 150, 150)
LIGHT_GRAY = (200, 200, 200)
GRID = (228, 228, 228)

# Perceptual sequential colormap built from five anchor colors.
_CMAP_ANCHORS = np.array(
    [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)],
    dtype=np.float64,
)


def _build_lut() -> np.ndarray:
    pos = np.linspace(0.0, 1.0, len(_CMAP_ANCHORS))
    xs = np.linspace(0.0, 1.0, 256)
    lut = np.stack([np.interp(xs, pos, _CMAP_ANCHORS[:, c]) for c in range(3)], axis=1)
    return np.round(lut).astype(np.uint8)


CMAP_LUT = _build_lut()


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick locations (1-2-5 progression) covering [lo, hi]."""
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12) + 0.0)  # normalize -0.0
        t += step
    return ticks


def fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    return f"{v:.4g}"


def pad_range(lo: float, hi: float, frac: float = 0.05) -> tuple[float, float]:
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        pad = 1.0 if hi == 0 else abs(hi) * 0.05 + 1e-12
    else:
        pad = (hi - lo) * frac
    return lo - pad, hi + pad


class Axes:
    """A rectangular plot region with data-space to pixel-space mapping."""

    def __init__(
        self,
        canvas: Canvas,
        px0: int,
        py0: int,
        px1: int,
        py1: int,
        xlim: tuple[float, float],
        ylim: tuple[float, float],
    ):
        self.c = canvas
        self.px0, self.py0, self.px1, self.py1 = int(px0), int(py0), int(px1), int(py1)
        self.xlim = xlim
        self.ylim = ylim

    def x_to_px(self, x: float) -> int:
        lo, hi = self.xlim
        frac = 0.5 if hi == lo else (x - lo) / (hi - lo)
        return self.px0 + int(round(frac * (self.px1 - self.px0)))

    def y_to_px(self, y: float) -> int:
        lo, hi = self.ylim
        frac = 0.5 if hi == lo else (y - lo) / (hi - lo)
        return self.py1 - int(round(frac * (self.py1 - self.py0)))

    # -- decorations -----------------------------------------------------

    def frame(self) -> None:
        c = self.c
        c.line(self.px0, self.py0, self.px1, self.py0, BLACK)
        c.line(self.px0, self.py1, self.px1, self.py1, BLACK)
        c.line(self.px0, self.py0, self.px0, self.py1, BLACK)
        c.line(self.px1, self.py0, self.px1, self.py1, BLACK)

    def grid_and_ticks(self, x_ticks: bool = True, y_ticks: bool = True) -> None:
        if x_ticks:
            for t in nice_ticks(*self.xlim):
                px = self.x_to_px(t)
                if self.px0 < px < self.px1:
                    self.c.line(px, self.py0 + 1, px, self.py1 - 1, GRID)
                self.c.line(px, self.py1, px, self.py1 + 3, BLACK)
                self.c.text_centered(px, self.py1 + 6, fmt_tick(t))
        if y_ticks:
            for t in nice_ticks(*self.ylim):
                py = self.y_to_px(t)
                if self.py0 < py < self.py1:
                    self.c.line(self.px0 + 1, py, self.px1 - 1, py, GRID)
                self.c.line(self.px0 - 3, py, self.px0, py, BLACK)
                self.c.text_right(self.px0 - 5, py - 5, fmt_tick(t))

    def xlabel(self, s: str) -> None:
        self.c.text_centered((self.px0 + self.px1) // 2, self.py1 + 20, s)

    def ylabel(self, s: str) -> None:
        self.c.text_vertical(max(0, self.px0 - 48), (self.py0 + self.py1) // 2, s)

    def legend(self, entries: list[tuple[str, RGB]]) -> None:
        """Small top-right legend: color swatch + name per entry."""
        if not entries:
            return
        row_h = 13
        width = max(text_size(name)[0] for name, _ in entries) + 22
        x0 = self.px1 - width - 4
        y = self.py0 + 4
        self.c.fill_rect(x0, y, self.px1 - 4, y + row_h * len(entries) + 2, (255, 255, 255))
        for name, color in entries:
            self.c.line(x0 + 2, y + 5, x0 + 14, y + 5, color, 2)
            self.c.text(x0 + 18, y, name, BLACK)
            y += row_h

    def annotation(self, s: str, color: RGB = BLACK) -> None:
        self.c.text(self.px0 + 6, self.py0 + 4, s, color)

    # -- data marks ------------------------------------------------------

    def polyline(self, xs, ys, color: RGB, width: int = 1) -> None:
        pts = [(self.x_to_px(x), self.y_to_px(y)) for x, y in zip(xs, ys)]
        if len(pts) == 1:
            self.c.pixel_block(*pts[0], color, width)
        else:
            self.c.polyline(pts, color, width)

    def dots(self, xs, ys, color: RGB, radius: int = 3) -> None:
        for x, y in zip(xs, ys):
            self.c.disc(self.x_to_px(x), self.y_to_px(y), radius, color)

    def hline(self, y: float, color: RGB, dashed: bool = False) -> None:
        py = self.y_to_px(y)
        if dashed:
            for x in range(self.px0, self.px1, 8):
                self.c.line(x, py, min(x + 4, self.px1), py, color)
        else:
            self.c.line(self.px0, py, self.px1, py, color)

    def vspan(self, x0: float, x1: float, color: RGB) -> None:
        self.c.fill_rect(self.x_to_px(x0), self.py0 + 1, self.x_to_px(x1), self.py1 - 1, color)

    def hbar(self, x0: float, x1: float, y_px_offset: int, color: RGB) -> None:
        y = self.py0 + y_px_offset
        self.c.line(self.x_to_px(x0), y, self.x_to_px(x1), y, color, 3)

    def heatmap(self, matrix: np.ndarray) -> None:
        """Nearest-neighbour heatmap of (rows, cols); row 0 at the bottom."""
        m = np.asarray(matrix, dtype=np.float64)
        lo, hi = float(np.min(m)), float(np.max(m))
        if hi == lo:
            idx = np.full(m.shape, 128, dtype=np.intp)
        else:
            idx = np.clip(((m - lo) / (hi - lo) * 255.0), 0, 255).astype(np.intp)
        h = self.py1 - self.py0
        w = self.px1 - self.px0
        if h <= 1 or w <= 1:
            return
        rows = np.minimum((np.arange(h) * m.shape[0]) // h, m.shape[0] - 1)
        cols = np.minimum((np.arange(w) * m.shape[1]) // w, m.shape[1] - 1)
        block = CMAP_LUT[idx[rows[::-1][:, None], cols[None, :]]]
        self.c.buf[self.py0 : self.py0 + h, self.px0 : self.px0 + w] = block
