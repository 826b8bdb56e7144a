"""Text token counting: exact BPE when a vocabulary is available, else a
deterministic estimator.

The estimator's rule set is frozen (tests pin its outputs):

* whitespace separates pieces and costs nothing;
* a word (maximal ASCII letter run) costs 1;
* a number matches ``[+-]?digits[.digits]``: the signed integer part costs
  1 per started group of 3 digits (sign rides along), and the fractional
  part, dot included, costs 1 per started group of 3 digits;
* a bare fraction ``.digits`` is costed like a fractional part;
* any other run of consecutive non-alphanumeric characters costs 1.

So ``"1.02 -0.88 0.43"`` counts 6: each number splits into a signed integer
piece and a decimal piece.
"""

from __future__ import annotations

import base64
import math
import re
from functools import lru_cache
from pathlib import Path

from .errors import TokenizerUnavailable

_PIECES = re.compile(
    r"""
      (?P<word>[A-Za-z]+)
    | (?P<number>[+-]?\d+(?:\.\d+)?)
    | (?P<fraction>\.\d+)
    | (?P<space>\s+)
    | (?P<symbols>[^\sA-Za-z0-9]+)
    | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)

_NUMBER = re.compile(r"([+-]?)(\d+)(?:\.(\d+))?")

# GPT-style pre-tokenization, ASCII approximation (exact byte-level parity
# with any particular public encoding is explicitly not a goal here).
_BPE_PIECES = re.compile(
    r"'(?:[sdmt]|ll|ve|re)|[A-Za-z]+|\d{1,3}| ?[^\s\w]+|\s+(?!\S)|\s+"
)


def _estimate(text: str) -> int:
    count = 0
    for m in _PIECES.finditer(text):
        kind = m.lastgroup
        if kind in ("word", "symbols", "other"):
            count += 1
        elif kind == "number":
            _, intpart, frac = _NUMBER.fullmatch(m.group()).groups()
            count += math.ceil(len(intpart) / 3)
            if frac is not None:
                count += math.ceil(len(frac) / 3)
        elif kind == "fraction":
            count += math.ceil((len(m.group()) - 1) / 3)
    return count


class Tokenizer:
    """Counts tokens for prompt-cost accounting.

    ``from_vocab_file`` loads a ``.tiktoken``-format vocabulary
    (base64 token + rank per line) and counts via byte-level BPE;
    ``fallback`` uses the documented estimator and flags counts approximate.
    """

    def __init__(self, ranks: dict[bytes, int] | None, name: str):
        self._ranks = ranks
        self.name = name

    @classmethod
    def fallback(cls) -> "Tokenizer":
        return cls(None, "fallback-estimator")

    @classmethod
    def from_vocab_file(cls, path: str | Path) -> "Tokenizer":
        ranks: dict[bytes, int] = {}
        for line in Path(path).read_text().splitlines():
            if not line:
                continue
            token_b64, rank = line.split()
            ranks[base64.b64decode(token_b64)] = int(rank)
        if not ranks:
            raise TokenizerUnavailable(f"vocabulary file {path} is empty")
        return cls(ranks, Path(path).stem)

    @property
    def is_exact(self) -> bool:
        return self._ranks is not None

    def count(self, text: str) -> int:
        if not text:
            return 0
        if self._ranks is None:
            return _estimate(text)
        return sum(
            self._bpe_len(m.group().encode("utf-8")) for m in _BPE_PIECES.finditer(text)
        )

    def _bpe_len(self, piece: bytes) -> int:
        ranks = self._ranks
        if piece in ranks:
            return 1
        parts = [piece[i : i + 1] for i in range(len(piece))]
        while len(parts) > 1:
            best_rank, best_i = None, -1
            for i in range(len(parts) - 1):
                rank = ranks.get(parts[i] + parts[i + 1])
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank, best_i = rank, i
            if best_rank is None:
                break
            parts[best_i : best_i + 2] = [parts[best_i] + parts[best_i + 1]]
        return len(parts)


@lru_cache(maxsize=1)
def default_tokenizer() -> Tokenizer:
    return Tokenizer.fallback()
