"""Packed bitmap font (generated by scripts/extract_font.py; do not edit).

Each glyph maps to (advance_px, row_masks) where bit i of a row mask is
pixel column i. FONT_HEIGHT rows per glyph.
"""

FONT_HEIGHT = 11

GLYPHS = {
    ' ': (2, (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)),
    '!': (3, (0, 2, 2, 2, 2, 2, 0, 0, 2, 0, 0)),
    '"': (3, (0, 6, 6, 6, 0, 0, 0, 0, 0, 0, 0)),
    '#': (6, (0, 20, 12, 12, 30, 10, 30, 10, 6, 0, 0)),
    '$': (7, (8, 28, 42, 42, 14, 24, 40, 42, 28, 8, 0)),
    '%': (7, (0, 78, 42, 42, 30, 240, 168, 164, 228, 0, 0)),
    '&': (7, (0, 28, 2, 34, 124, 34, 34, 34, 60, 0, 0)),
    "'": (1, (0, 2, 2, 2, 0, 0, 0, 0, 0, 0, 0)),
    '(': (4, (0, 4, 2, 2, 2, 2, 2, 2, 4, 4, 0)),
    ')': (3, (0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0)),
    '*': (7, (0, 0, 0, 0, 8, 42, 28, 20, 0, 0, 0)),
    '+': (7, (0, 0, 0, 8, 8, 62, 8, 8, 0, 0, 0)),
    ',': (2, (0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0)),
    '-': (3, (0, 0, 0, 0, 0, 3, 0, 0, 0, 0, 0)),
    '.': (2, (0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0)),
    '/': (3, (0, 2, 2, 1, 1, 1, 0, 0, 0, 0, 0)),
    '0': (6, (0, 28, 54, 34, 34, 34, 34, 54, 28, 0, 0)),
    '1': (6, (0, 12, 10, 8, 8, 8, 8, 8, 8, 0, 0)),
    '2': (6, (0, 12, 18, 16, 16, 8, 4, 2, 31, 0, 0)),
    '3': (6, (0, 14, 17, 16, 12, 16, 17, 17, 14, 0, 0)),
    '4': (6, (0, 16, 24, 20, 20, 18, 63, 16, 16, 0, 0)),
    '5': (6, (0, 30, 1, 1, 13, 19, 16, 17, 14, 0, 0)),
    '6': (6, (0, 28, 36, 34, 30, 34, 34, 34, 28, 0, 0)),
    '7': (6, (0, 31, 16, 8, 8, 4, 4, 2, 2, 0, 0)),
    '8': (6, (0, 28, 34, 34, 28, 34, 34, 34, 28, 0, 0)),
    '9': (6, (0, 28, 34, 34, 34, 60, 34, 18, 28, 0, 0)),
    ':': (2, (0, 0, 0, 2, 0, 0, 0, 0, 2, 0, 0)),
    ';': (2, (0, 0, 0, 2, 0, 0, 0, 0, 2, 1, 0)),
    '<': (6, (0, 0, 0, 0, 24, 6, 2, 12, 16, 0, 0)),
    '=': (6, (0, 0, 0, 0, 30, 0, 30, 0, 0, 0, 0)),
    '>': (6, (0, 0, 0, 0, 6, 24, 16, 12, 2, 0, 0)),
    '?': (4, (0, 12, 18, 18, 16, 8, 8, 0, 8, 0, 0)),
    '@': (10, (0, 112, 140, 372, 330, 330, 298, 218, 4, 120, 0)),
    'A': (6, (0, 8, 12, 20, 18, 30, 34, 34, 33, 0, 0)),
    'B': (6, (0, 30, 34, 34, 18, 62, 34, 34, 30, 0, 0)),
    'C': (7, (0, 56, 68, 66, 2, 2, 66, 68, 60, 0, 0)),
    'D': (7, (0, 30, 34, 66, 66, 66, 66, 34, 30, 0, 0)),
    'E': (6, (0, 62, 2, 2, 2, 30, 2, 2, 62, 0, 0)),
    'F': (6, (0, 62, 2, 2, 2, 30, 2, 2, 2, 0, 0)),
    'G': (7, (0, 56, 100, 66, 2, 114, 66, 100, 92, 0, 0)),
    'H': (8, (0, 66, 66, 66, 66, 126, 66, 66, 66, 0, 0)),
    'I': (3, (0, 2, 2, 2, 2, 2, 2, 2, 2, 0, 0)),
    'J': (6, (0, 16, 16, 16, 16, 16, 18, 18, 12, 0, 0)),
    'K': (6, (0, 34, 18, 10, 10, 14, 10, 18, 34, 0, 0)),
    'L': (6, (0, 2, 2, 2, 2, 2, 2, 2, 62, 0, 0)),
    'M': (9, (0, 198, 198, 198, 170, 170, 170, 154, 146, 0, 0)),
    'N': (8, (0, 38, 38, 38, 42, 42, 42, 50, 50, 0, 0)),
    'O': (7, (0, 56, 68, 130, 130, 130, 130, 68, 56, 0, 0)),
    'P': (6, (0, 30, 34, 34, 34, 30, 2, 2, 2, 0, 0)),
    'Q': (7, (0, 56, 68, 130, 130, 130, 130, 68, 248, 0, 0)),
    'R': (6, (0, 30, 34, 34, 34, 30, 50, 34, 34, 0, 0)),
    'S': (6, (0, 28, 34, 2, 4, 56, 32, 34, 28, 0, 0)),
    'T': (6, (0, 62, 8, 8, 8, 8, 8, 8, 8, 0, 0)),
    'U': (7, (0, 34, 34, 34, 34, 34, 34, 34, 28, 0, 0)),
    'V': (6, (0, 33, 34, 34, 18, 20, 20, 12, 8, 0, 0)),
    'W': (10, (0, 305, 306, 306, 298, 170, 202, 204, 196, 0, 0)),
    'X': (6, (0, 34, 18, 20, 12, 12, 20, 18, 34, 0, 0)),
    'Y': (6, (0, 34, 34, 20, 20, 8, 8, 8, 8, 0, 0)),
    'Z': (7, (0, 62, 32, 16, 8, 8, 4, 2, 62, 0, 0)),
    '[': (3, (6, 2, 2, 2, 2, 2, 2, 2, 2, 6, 0)),
    '\\': (3, (0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 0)),
    ']': (3, (1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0)),
    '^': (6, (0, 0, 0, 12, 10, 10, 18, 0, 0, 0, 0)),
    '_': (5, (0, 0, 0, 0, 0, 0, 0, 0, 0, 31, 0)),
    '`': (3, (0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0)),
    'a': (5, (0, 0, 0, 28, 18, 24, 22, 18, 30, 0, 0)),
    'b': (6, (0, 2, 2, 30, 34, 34, 34, 34, 30, 0, 0)),
    'c': (5, (0, 0, 0, 28, 34, 2, 2, 34, 28, 0, 0)),
    'd': (6, (0, 32, 32, 60, 34, 34, 34, 34, 60, 0, 0)),
    'e': (6, (0, 0, 0, 28, 34, 62, 2, 34, 28, 0, 0)),
    'f': (3, (4, 2, 2, 7, 2, 2, 2, 2, 2, 0, 0)),
    'g': (6, (0, 0, 0, 60, 34, 34, 34, 34, 60, 34, 28)),
    'h': (7, (0, 2, 2, 30, 38, 34, 34, 34, 34, 0, 0)),
    'i': (3, (0, 2, 0, 2, 2, 2, 2, 2, 2, 0, 0)),
    'j': (3, (0, 2, 0, 2, 2, 2, 2, 2, 2, 2, 3)),
    'k': (6, (0, 2, 2, 18, 10, 6, 10, 10, 18, 0, 0)),
    'l': (3, (0, 2, 2, 2, 2, 2, 2, 2, 6, 0, 0)),
    'm': (9, (0, 0, 0, 238, 146, 146, 146, 146, 146, 0, 0)),
    'n': (7, (0, 0, 0, 30, 38, 34, 34, 34, 34, 0, 0)),
    'o': (5, (0, 0, 0, 28, 34, 34, 34, 34, 28, 0, 0)),
    'p': (6, (0, 0, 0, 30, 34, 34, 34, 34, 30, 2, 2)),
    'q': (6, (0, 0, 0, 60, 34, 34, 34, 34, 60, 32, 32)),
    'r': (4, (0, 0, 0, 14, 2, 2, 2, 2, 2, 0, 0)),
    's': (4, (0, 0, 0, 14, 18, 6, 24, 18, 30, 0, 0)),
    't': (3, (0, 2, 2, 7, 2, 2, 2, 2, 6, 0, 0)),
    'u': (7, (0, 0, 0, 34, 34, 34, 34, 50, 60, 0, 0)),
    'v': (5, (0, 0, 0, 17, 17, 10, 10, 10, 4, 0, 0)),
    'w': (8, (0, 0, 0, 153, 89, 90, 86, 102, 36, 0, 0)),
    'x': (5, (0, 0, 0, 4, 5, 2, 3, 5, 4, 0, 0)),
    'y': (5, (0, 0, 0, 17, 17, 10, 10, 10, 4, 4, 2)),
    'z': (6, (0, 0, 0, 30, 16, 8, 4, 2, 30, 0, 0)),
    '{': (3, (6, 2, 2, 2, 2, 2, 2, 2, 2, 6, 0)),
    '|': (3, (2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2)),
    '}': (3, (3, 2, 2, 2, 2, 2, 2, 2, 2, 3, 0)),
    '~': (6, (0, 0, 0, 0, 0, 22, 26, 0, 0, 0, 0)),
}
