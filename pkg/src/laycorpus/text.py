"""Deterministic tokenization and sentence segmentation.

Every score in the package (ROUGE-L, readability, alignment) is computed
over the output of these functions, so they are rule-based and free of
external models: identical input gives identical tokens on any machine.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

__all__ = [
    "Token",
    "Sentence",
    "TokenizedDocument",
    "tokenize",
    "word_tokens",
    "split_sentences",
    "text_counts",
    "ABBREVIATIONS",
]

# a word is a maximal run of letters/digits; every other non-space char
# stands alone
_TOKEN_RE = re.compile(r"[^\W_]+|[^\s]", re.UNICODE)

# terminal punctuation, optional closing quotes/brackets, then whitespace
_BOUNDARY_RE = re.compile(r"[.!?]+[\"'”’)\]]*\s+")

ABBREVIATIONS = frozenset(
    {
        "e.g.", "i.e.", "al.", "fig.", "figs.", "eq.", "eqs.", "ref.", "refs.",
        "vs.", "cf.", "approx.", "dr.", "mr.", "mrs.", "ms.", "prof.", "no.",
        "vol.", "ca.", "resp.", "sp.", "spp.", "st.",
    }
)


class Token(NamedTuple):
    text: str
    is_word: bool


@dataclass(frozen=True)
class Sentence:
    text: str
    tokens: Tuple[Token, ...]
    index: int

    @property
    def words(self) -> List[str]:
        return [t.text for t in self.tokens if t.is_word]

    @property
    def word_count(self) -> int:
        return sum(1 for t in self.tokens if t.is_word)


@dataclass(frozen=True)
class TokenizedDocument:
    sentences: Tuple[Sentence, ...]
    word_count: int
    letter_count: int
    sentence_count: int


def tokenize(text: str) -> List[Token]:
    """Split ``text`` into lowercased tokens.

    Words are runs of Unicode letters and digits. Punctuation and symbols
    become one-character non-word tokens.

    >>> [t.text for t in tokenize("Zika Virus (ZIKV)")]
    ['zika', 'virus', '(', 'zikv', ')']
    """
    # lowercase first: some characters expand under lower() and the regex
    # must see the expanded form for tokenization to be idempotent
    out = []
    for m in _TOKEN_RE.finditer(text.lower()):
        piece = m.group()
        out.append(Token(piece, any(c.isalnum() for c in piece)))
    return out


def word_tokens(text: str) -> List[str]:
    """Lowercased word tokens only, punctuation dropped."""
    return [t.text for t in tokenize(text) if t.is_word]


def _is_abbreviation(text: str, end: int) -> bool:
    # ``end`` points just past the terminal punctuation run
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    chunk = text[start:end].lstrip("([{\"'“‘").lower()
    return chunk in ABBREVIATIONS


def split_sentences(text: str) -> List[Sentence]:
    """Split ``text`` at ``.``, ``!`` or ``?`` followed by whitespace and an
    uppercase letter or digit, unless the period closes a known abbreviation.
    """
    pieces = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        nxt = m.end()
        if nxt >= len(text):
            break
        ch = text[nxt]
        if not (ch.isupper() or ch.isdigit()):
            continue
        punct_end = m.start() + len(m.group().rstrip())
        if text[m.start()] == "." and _is_abbreviation(text, m.start() + 1):
            continue
        pieces.append(text[start:punct_end])
        start = nxt
    pieces.append(text[start:])

    sentences = []
    for piece in pieces:
        piece = piece.strip()
        if piece:
            sentences.append(Sentence(piece, tuple(tokenize(piece)), len(sentences)))
    return sentences


def text_counts(text: str) -> TokenizedDocument:
    sentences = tuple(split_sentences(text))
    return TokenizedDocument(
        sentences=sentences,
        word_count=sum(s.word_count for s in sentences),
        letter_count=sum(1 for c in text if c.isalpha()),
        sentence_count=len(sentences),
    )
