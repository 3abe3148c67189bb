"""Corpus ingestion, filtering, splitting and derived datasets.

The corpus is JSONL, one abstract / lay-summary pair per line with keys
``id``, ``journal``, ``src`` and ``tgt``. Anything else on the line is
kept in :attr:`ParallelRecord.extra` and written back out unchanged.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .align import AlignmentResult, build_score_matrix, gpss
from .metrics import (
    FrequencyTable,
    coleman_liau,
    paired_t_test,
    rouge_l,
    word_familiarity,
)
from .rng import SplitMix64
from .text import split_sentences, text_counts, tokenize, word_tokens

__all__ = [
    "MASK_TOKEN",
    "CorpusFormatError",
    "ParallelRecord",
    "DroppedRecord",
    "SplitRatios",
    "DerivedPair",
    "GroupStats",
    "CorpusStats",
    "load_corpus",
    "write_corpus",
    "filter_outliers",
    "split_corpus",
    "derive_simplification_pairs",
    "derive_background_pairs",
    "derive_plainness_training",
    "corrupt_for_pretraining",
    "corpus_statistics",
]

MASK_TOKEN = "<mask>"

# ratios are renormalized; this only guards against gross mistakes
SPLIT_RATIO_TOLERANCE = 1e-4

# same word definition as text.tokenize, applied to original-case text
_WORD_SPAN_RE = re.compile(r"[^\W_]+")


class CorpusFormatError(ValueError):
    def __init__(self, message: str, path=None, lineno: Optional[int] = None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:{lineno}: " if lineno is not None else f"{path}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class ParallelRecord:
    id: str
    journal: str
    source: str
    target: str
    extra: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.source.strip():
            raise ValueError(f"record {self.id!r}: empty source")
        if not self.target.strip():
            raise ValueError(f"record {self.id!r}: empty target")

    def to_json(self) -> dict:
        obj = {"id": self.id, "journal": self.journal, "src": self.source, "tgt": self.target}
        for k, v in self.extra.items():
            obj.setdefault(k, v)
        return obj


def _parse_record(line: str) -> ParallelRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object")
    for key in ("id", "journal", "src", "tgt"):
        if key not in obj:
            raise ValueError(f"missing {key!r} field")
        if not isinstance(obj[key], str):
            raise ValueError(f"{key!r} must be a string")
    extra = {k: v for k, v in obj.items() if k not in ("id", "journal", "src", "tgt")}
    return ParallelRecord(obj["id"], obj["journal"], obj["src"], obj["tgt"], extra)


def load_corpus(path) -> Iterator[ParallelRecord]:
    """Yield records in file order.

    Raises :class:`CorpusFormatError` naming the line on malformed JSON,
    missing fields, empty texts or a repeated id. Blank lines are skipped.
    """
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = _parse_record(line)
            except ValueError as e:
                raise CorpusFormatError(str(e), path, lineno) from None
            if record.id in seen:
                raise CorpusFormatError(f"duplicate id {record.id!r}", path, lineno)
            seen.add(record.id)
            yield record


def write_corpus(records: Iterable[ParallelRecord], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


# ---------------------------------------------------------------------------
# outlier filtering


@dataclass(frozen=True)
class DroppedRecord:
    record: ParallelRecord
    reasons: Tuple[str, ...]
    similarity: float


def lexical_similarity(record: ParallelRecord) -> float:
    """Document-level ROUGE-L F1, target as candidate, source as reference."""
    return rouge_l(word_tokens(record.target), word_tokens(record.source)).f1


def filter_outliers(
    records: Iterable[ParallelRecord],
    sim_low: float = 0.05,
    sim_high: float = 0.95,
    len_low: int = 50,
    len_high: float = 2000,
) -> Tuple[List[ParallelRecord], List[DroppedRecord]]:
    """Drop pairs whose lexical similarity or word counts fall out of bounds.

    Bounds are inclusive. Every violated rule is listed on the dropped
    record.
    """
    if sim_low > sim_high:
        raise ValueError("sim_low must not exceed sim_high")
    if len_low < 1 or len_high < len_low:
        raise ValueError("length bounds must satisfy 1 <= len_low <= len_high")
    kept, dropped = [], []
    for r in records:
        sim = lexical_similarity(r)
        n_src = len(word_tokens(r.source))
        n_tgt = len(word_tokens(r.target))
        reasons = []
        if sim < sim_low:
            reasons.append("similarity_low")
        if sim > sim_high:
            reasons.append("similarity_high")
        if not len_low <= n_src <= len_high:
            reasons.append("source_length")
        if not len_low <= n_tgt <= len_high:
            reasons.append("target_length")
        if reasons:
            dropped.append(DroppedRecord(r, tuple(reasons), sim))
        else:
            kept.append(r)
    return kept, dropped


# ---------------------------------------------------------------------------
# splits


@dataclass(frozen=True)
class SplitRatios:
    train_ratio: float
    valid_ratio: float
    test_ratio: float
    seed: int = 0

    def __post_init__(self):
        ratios = (self.train_ratio, self.valid_ratio, self.test_ratio)
        if any(r < 0 for r in ratios):
            raise ValueError(f"split ratios must be non-negative, got {ratios}")
        if abs(sum(ratios) - 1.0) > SPLIT_RATIO_TOLERANCE:
            raise ValueError(f"split ratios must sum to 1, got {sum(ratios)!r}")

    def sizes(self, n: int) -> Tuple[int, int, int]:
        """Floor allocation for valid/test, remainder to train."""
        total = self.train_ratio + self.valid_ratio + self.test_ratio
        n_valid = math.floor(n * self.valid_ratio / total)
        n_test = math.floor(n * self.test_ratio / total)
        return n - n_valid - n_test, n_valid, n_test


def split_corpus(records: Sequence[ParallelRecord], ratios: SplitRatios):
    """Partition ``records`` into (train, valid, test).

    Membership is drawn by a SplitMix64 Fisher-Yates permutation; within
    each part records keep their input order.
    """
    records = list(records)
    n_train, n_valid, _ = ratios.sizes(len(records))
    order = SplitMix64(ratios.seed).permutation(len(records))
    cuts = (order[:n_train], order[n_train:n_train + n_valid], order[n_train + n_valid:])
    return tuple([records[i] for i in sorted(part)] for part in cuts)


# ---------------------------------------------------------------------------
# derived datasets


@dataclass(frozen=True)
class DerivedPair:
    id: str
    source_text: str
    target_text: str
    kind: str

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "src": self.source_text, "tgt": self.target_text}


def _aligned(record: ParallelRecord, min_score: float):
    src = split_sentences(record.source)
    tgt = split_sentences(record.target)
    return src, tgt, gpss(build_score_matrix(src, tgt), min_score)


def _length_ok(n: int, min_len: int, max_len: int) -> bool:
    return min_len <= n <= max_len


def derive_simplification_pairs(
    record: ParallelRecord,
    min_score: float = 0.0,
    min_len: int = 10,
    max_len: int = 150,
) -> List[DerivedPair]:
    """One sentence pair per GPSS match whose sides both have
    ``min_len..max_len`` words."""
    src, tgt, alignment = _aligned(record, min_score)
    out = []
    for k, p in enumerate(alignment.pairs):
        s, t = src[p.src_index], tgt[p.tgt_index]
        if _length_ok(s.word_count, min_len, max_len) and _length_ok(t.word_count, min_len, max_len):
            out.append(DerivedPair(f"{record.id}-s{k}", s.text, t.text, "simplification"))
    return out


def background_boundary(alignment: AlignmentResult, boundary_n: int) -> Optional[Tuple[int, int]]:
    """(src_end, tgt_end) exclusive cut points for a background pair, or None."""
    if boundary_n not in (1, 2, 3):
        raise ValueError(f"boundary_n must be 1, 2 or 3, got {boundary_n}")
    pairs = sorted(alignment.pairs, key=lambda p: p.tgt_index)
    if len(pairs) < boundary_n:
        return None
    pivot = pairs[boundary_n - 1]
    if boundary_n == 1:
        # the first matched target sentence itself is kept
        return pivot.src_index, pivot.tgt_index + 1
    return pivot.src_index, pivot.tgt_index


def derive_background_pairs(
    record: ParallelRecord,
    boundary_n: int = 2,
    min_score: float = 0.0,
) -> Optional[DerivedPair]:
    """Source/target prefixes ending before the ``boundary_n``-th match.

    Returns None when there are fewer matches or either side is empty.
    """
    if boundary_n not in (1, 2, 3):
        raise ValueError(f"boundary_n must be 1, 2 or 3, got {boundary_n}")
    src, tgt, alignment = _aligned(record, min_score)
    cut = background_boundary(alignment, boundary_n)
    if cut is None:
        return None
    src_end, tgt_end = cut
    if src_end == 0 or tgt_end == 0:
        return None
    return DerivedPair(
        f"{record.id}-bg{boundary_n}",
        " ".join(s.text for s in src[:src_end]),
        " ".join(t.text for t in tgt[:tgt_end]),
        "background",
    )


def derive_plainness_training(
    records: Iterable[ParallelRecord],
    min_len: int = 10,
    max_len: int = 150,
    min_score: float = 0.0,
) -> List[Tuple[str, int]]:
    """``(sentence, label)`` rows: 0 for the abstract side, 1 for the lay side."""
    rows = []
    for record in records:
        for pair in derive_simplification_pairs(record, min_score, min_len, max_len):
            rows.append((pair.source_text, 0))
            rows.append((pair.target_text, 1))
    return rows


# ---------------------------------------------------------------------------
# pretraining corruption


def corrupt_for_pretraining(
    text: str, seed: int, substitution_rate: float = 0.15
) -> Tuple[str, str]:
    """Shuffle sentences, then mask each word with probability ``substitution_rate``.

    Returns ``(corrupted, original)``. The sentence permutation is drawn
    first, then one uniform draw per word token in output order, all from
    a single ``SplitMix64(seed)`` stream. Punctuation is never masked.
    Output sentences are joined by single spaces.
    """
    if not 0.0 <= substitution_rate <= 1.0:
        raise ValueError(f"substitution_rate must be in [0, 1], got {substitution_rate}")
    rng = SplitMix64(seed)
    sentences = [s.text for s in split_sentences(text)]
    rng.shuffle(sentences)

    out = []
    for sent in sentences:
        pieces = []
        pos = 0
        for m in _WORD_SPAN_RE.finditer(sent):
            pieces.append(sent[pos:m.start()])
            word = m.group()
            if any(c.isalnum() for c in word) and rng.random() < substitution_rate:
                pieces.append(MASK_TOKEN)
            else:
                pieces.append(word)
            pos = m.end()
        pieces.append(sent[pos:])
        out.append("".join(pieces))
    return " ".join(out), text


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class GroupStats:
    count: int
    mean_src_len: float
    mean_tgt_len: float
    mean_src_cli: Optional[float]
    mean_tgt_cli: Optional[float]
    mean_src_familiarity: Optional[float] = None
    mean_tgt_familiarity: Optional[float] = None

    def to_json(self, with_familiarity: bool) -> dict:
        d = {
            "count": self.count,
            "mean_src_len": self.mean_src_len,
            "mean_tgt_len": self.mean_tgt_len,
            "mean_src_cli": self.mean_src_cli,
            "mean_tgt_cli": self.mean_tgt_cli,
        }
        if with_familiarity:
            d["mean_src_familiarity"] = self.mean_src_familiarity
            d["mean_tgt_familiarity"] = self.mean_tgt_familiarity
        return d


@dataclass(frozen=True)
class CorpusStats:
    journals: Dict[str, GroupStats]
    overall: GroupStats
    t_statistic: Optional[float]
    p_value: Optional[float]
    with_familiarity: bool = False

    def to_json(self) -> dict:
        return {
            "journals": {j: s.to_json(self.with_familiarity) for j, s in sorted(self.journals.items())},
            "overall": self.overall.to_json(self.with_familiarity),
            "readability_t_test": {"t": self.t_statistic, "p": self.p_value},
        }


@dataclass
class _RecordMeasures:
    journal: str
    src_len: int
    tgt_len: int
    src_cli: Optional[float]
    tgt_cli: Optional[float]
    src_fam: Optional[float]
    tgt_fam: Optional[float]


def _measure(record: ParallelRecord, table: Optional[FrequencyTable]) -> _RecordMeasures:
    src_doc, tgt_doc = text_counts(record.source), text_counts(record.target)

    def cli(doc):
        return coleman_liau(doc) if doc.word_count else None

    def fam(text):
        if table is None:
            return None
        words = [t.text for t in tokenize(text) if t.is_word]
        return word_familiarity(words, table) if words else None

    return _RecordMeasures(
        record.journal, src_doc.word_count, tgt_doc.word_count,
        cli(src_doc), cli(tgt_doc), fam(record.source), fam(record.target),
    )


def _mean(values) -> Optional[float]:
    vals = [v for v in values if v is not None]
    # fsum is exactly rounded, so the mean does not depend on record order
    return math.fsum(vals) / len(vals) if vals else None


def _group(rows: List[_RecordMeasures]) -> GroupStats:
    return GroupStats(
        count=len(rows),
        mean_src_len=_mean(r.src_len for r in rows),
        mean_tgt_len=_mean(r.tgt_len for r in rows),
        mean_src_cli=_mean(r.src_cli for r in rows),
        mean_tgt_cli=_mean(r.tgt_cli for r in rows),
        mean_src_familiarity=_mean(r.src_fam for r in rows),
        mean_tgt_familiarity=_mean(r.tgt_fam for r in rows),
    )


def corpus_statistics(
    records: Iterable[ParallelRecord],
    familiarity_table: Optional[FrequencyTable] = None,
) -> CorpusStats:
    """Per-journal and overall length/readability aggregates.

    The t-test compares per-record source vs target Coleman-Liau scores;
    it is reported as None when fewer than two records qualify or the
    differences have no variance.
    """
    rows = [_measure(r, familiarity_table) for r in records]
    if not rows:
        raise ValueError("empty corpus")
    by_journal: Dict[str, List[_RecordMeasures]] = {}
    for r in rows:
        by_journal.setdefault(r.journal, []).append(r)

    both = [(r.src_cli, r.tgt_cli) for r in rows if r.src_cli is not None and r.tgt_cli is not None]
    t = p = None
    if len(both) >= 2:
        try:
            t, p = paired_t_test([a for a, _ in both], [b for _, b in both])
        except ValueError:
            pass
    return CorpusStats(
        journals={j: _group(g) for j, g in by_journal.items()},
        overall=_group(rows),
        t_statistic=t,
        p_value=p,
        with_familiarity=familiarity_table is not None,
    )
