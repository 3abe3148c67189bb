"""Greedy paired sentence search (GPSS).

Sentence pairs between a source abstract and its lay summary are scored
with ROUGE-L F1, then matched by repeatedly taking the best-scoring cell
of a rectangle and recursing into the rectangles above-left and
below-right of it. The result is a monotone alignment: matched pairs
never cross.

Rectangles are half-open, ``[src_start, src_end) x [tgt_start, tgt_end)``.
After picking ``(i, j)`` the two sub-problems are
``[src_start, i) x [tgt_start, j)`` and ``[i+1, src_end) x [j+1, tgt_end)``.
Ties go to the smallest source index, then the smallest target index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .metrics import rouge_l
from .text import Sentence, split_sentences

__all__ = [
    "AlignmentPair",
    "AlignmentResult",
    "build_score_matrix",
    "gpss",
    "align_documents",
]


@dataclass(frozen=True)
class AlignmentPair:
    src_index: int
    tgt_index: int
    score: float


@dataclass(frozen=True)
class AlignmentResult:
    pairs: Tuple[AlignmentPair, ...]
    src_labels: Tuple[bool, ...]
    tgt_labels: Tuple[bool, ...]

    @classmethod
    def from_pairs(cls, pairs, n_src: int, n_tgt: int) -> "AlignmentResult":
        pairs = tuple(sorted(pairs, key=lambda p: p.src_index))
        src = [False] * n_src
        tgt = [False] * n_tgt
        for p in pairs:
            src[p.src_index] = True
            tgt[p.tgt_index] = True
        return cls(pairs, tuple(src), tuple(tgt))

    def to_dict(self) -> dict:
        return {
            "pairs": [
                {"src": p.src_index, "tgt": p.tgt_index, "score": p.score}
                for p in self.pairs
            ],
            "src_labels": ["matched" if m else "unmatched" for m in self.src_labels],
            "tgt_labels": ["matched" if m else "unmatched" for m in self.tgt_labels],
        }


def build_score_matrix(src: Sequence[Sentence], tgt: Sequence[Sentence]) -> np.ndarray:
    """``S[i, j]`` = ROUGE-L F1 with ``tgt[j]`` as candidate, ``src[i]`` as reference."""
    src_words = [s.words for s in src]
    tgt_words = [t.words for t in tgt]
    scores = np.zeros((len(src), len(tgt)))
    for i, ref in enumerate(src_words):
        for j, cand in enumerate(tgt_words):
            scores[i, j] = rouge_l(cand, ref).f1
    return scores


def gpss(matrix, min_score: float = 0.0) -> AlignmentResult:
    """Run GPSS on a score matrix (``n_src x n_tgt``).

    Pairs are selected exactly as the recursion dictates, zero-score cells
    included; pairs scoring below ``min_score`` are dropped afterwards.
    """
    if not 0.0 <= min_score <= 1.0:
        raise ValueError(f"min_score must be in [0, 1], got {min_score}")
    scores = np.asarray(matrix, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("score matrix must be 2-d")
    if not np.isfinite(scores).all():
        raise ValueError("score matrix contains NaN or Inf")
    n_src, n_tgt = scores.shape

    pairs: List[AlignmentPair] = []
    stack = [(0, n_src, 0, n_tgt)]
    while stack:
        s0, s1, t0, t1 = stack.pop()
        if s0 >= s1 or t0 >= t1:
            continue
        block = scores[s0:s1, t0:t1]
        # argmax over the flattened row-major block = smallest (src, tgt) on ties
        flat = int(np.argmax(block))
        i, j = divmod(flat, t1 - t0)
        i += s0
        j += t0
        pairs.append(AlignmentPair(i, j, float(scores[i, j])))
        stack.append((s0, i, t0, j))
        stack.append((i + 1, s1, j + 1, t1))

    kept = [p for p in pairs if p.score >= min_score]
    return AlignmentResult.from_pairs(kept, n_src, n_tgt)


def align_documents(src_text: str, tgt_text: str, min_score: float = 0.0) -> AlignmentResult:
    """Sentence-split both texts and align them with GPSS.

    Indexes in the result refer to ``split_sentences`` output.
    """
    src = split_sentences(src_text)
    tgt = split_sentences(tgt_text)
    return gpss(build_score_matrix(src, tgt), min_score)
