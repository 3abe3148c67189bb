"""Text-quality, readability and agreement metrics.

Token-level metrics take lists of already-tokenized strings (see
:func:`laycorpus.text.word_tokens`); BERTScore takes precomputed token
vectors since the encoder lives outside this package.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Hashable, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .text import TokenizedDocument

__all__ = [
    "PRF",
    "FrequencyTable",
    "lcs_length",
    "rouge_l",
    "coleman_liau",
    "word_familiarity",
    "bert_score",
    "cohens_kappa",
    "krippendorff_alpha_ordinal",
    "paired_t_test",
    "student_t_sf",
    "betainc",
    "load_frequency_table",
    "write_frequency_table",
]


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRF":
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))


# ---------------------------------------------------------------------------
# ROUGE-L


def lcs_length(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Length of the longest common subsequence of ``a`` and ``b``."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    # one row of the DP table, over the shorter sequence
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            if x == y:
                cur.append(prev[j] + 1)
            else:
                cur.append(cur[j] if cur[j] > prev[j + 1] else prev[j + 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[Hashable], reference: Sequence[Hashable]) -> PRF:
    """ROUGE-L with beta = 1.

    precision = LCS/|candidate|, recall = LCS/|reference|; a zero
    denominator gives 0 for that side.
    """
    lcs = lcs_length(candidate, reference)
    p = lcs / len(candidate) if candidate else 0.0
    r = lcs / len(reference) if reference else 0.0
    return PRF.from_pr(p, r)


# ---------------------------------------------------------------------------
# readability


def coleman_liau(doc: TokenizedDocument) -> float:
    """Coleman-Liau index: 0.0588 L - 0.296 S - 15.8.

    L is letters per 100 words and S sentences per 100 words.
    """
    if doc.word_count < 1:
        raise ValueError("empty document")
    letters = 100.0 * doc.letter_count / doc.word_count
    sentences = 100.0 * doc.sentence_count / doc.word_count
    return 0.0588 * letters - 0.296 * sentences - 15.8


@dataclass(frozen=True)
class FrequencyTable:
    """Document frequencies from a reference corpus.

    ``df`` is wrapped read-only on construction.
    """

    doc_count: int
    df: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.doc_count < 1:
            raise ValueError(f"doc_count must be positive, got {self.doc_count}")
        for tok, n in self.df.items():
            if not 1 <= n <= self.doc_count:
                raise ValueError(f"df for {tok!r} is {n}, outside [1, {self.doc_count}]")
        object.__setattr__(self, "df", MappingProxyType(dict(self.df)))

    @classmethod
    def from_documents(cls, documents: Sequence[Sequence[str]]) -> "FrequencyTable":
        """Build from tokenized documents (each a token list)."""
        counts: Counter = Counter()
        for doc in documents:
            counts.update(set(doc))
        return cls(len(documents), counts)

    def idf(self, token: str) -> float:
        # unseen words get df = 1, the least familiar possible
        return math.log(self.doc_count / self.df.get(token, 1))


def load_frequency_table(path) -> FrequencyTable:
    """Read the ``N <count>`` header + ``token<TAB>df`` lines format."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split()
        if len(header) != 2 or header[0] != "N":
            raise ValueError(f"{path}:1: expected 'N <doc_count>' header")
        try:
            n = int(header[1])
        except ValueError:
            raise ValueError(f"{path}:1: bad doc_count {header[1]!r}") from None
        df = {}
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '<token>\\t<df>'")
            try:
                count = int(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad df {parts[1]!r}") from None
            if not 1 <= count <= n:
                raise ValueError(f"{path}:{lineno}: df {count} outside [1, {n}]")
            df[parts[0]] = count
    return FrequencyTable(n, df)


def write_frequency_table(table: FrequencyTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"N {table.doc_count}\n")
        for tok in sorted(table.df):
            f.write(f"{tok}\t{table.df[tok]}\n")


def word_familiarity(tokens: Sequence[str], table: FrequencyTable) -> float:
    """Mean idf ``ln(N/df)`` over word tokens; lower means more familiar.

    Pass word tokens only; tokens without a letter or digit are skipped.
    """
    words = [t for t in tokens if any(c.isalnum() for c in t)]
    if not words:
        raise ValueError("empty text")
    return sum(table.idf(w) for w in words) / len(words)


# ---------------------------------------------------------------------------
# BERTScore


def _unit_rows(x: np.ndarray) -> np.ndarray:
    # divide by the largest component first so tiny vectors do not underflow
    # when squared; zero vectors stay zero, so their cosine with anything is 0
    scale = np.abs(x).max(axis=1, keepdims=True) if x.shape[1] else np.zeros((len(x), 1))
    x = np.divide(x, scale, out=np.zeros_like(x), where=scale > 0)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def bert_score(candidate, reference) -> PRF:
    """Greedy-matching BERTScore over token vectors (no idf, no rescaling)."""
    cand = np.asarray(candidate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if cand.ndim != 2 or ref.ndim != 2 or len(cand) == 0 or len(ref) == 0:
        raise ValueError("candidate and reference must be non-empty 2-d arrays")
    if cand.shape[1] != ref.shape[1]:
        raise ValueError(f"dimension mismatch: {cand.shape[1]} vs {ref.shape[1]}")
    if not (np.isfinite(cand).all() and np.isfinite(ref).all()):
        raise ValueError("embeddings contain NaN or Inf")
    sim = _unit_rows(cand) @ _unit_rows(ref).T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    # the harmonic mean is unbounded when signs differ; report 0 there
    if precision * recall <= 0:
        return PRF(precision, recall, 0.0)
    return PRF(precision, recall, 2 * precision * recall / (precision + recall))


# ---------------------------------------------------------------------------
# agreement


def cohens_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("empty label lists")
    n = len(a)
    p_o = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    p_e = sum(ca[k] * cb[k] for k in ca) / (n * n)
    if p_e == 1:
        # both raters used one and the same label throughout
        return 1.0
    return (p_o - p_e) / (1 - p_e)


def _ratings_units(ratings) -> list:
    """Rater x item matrix -> list of per-item value lists (missing dropped)."""
    units = []
    rows = [list(r) for r in ratings]
    if len(rows) < 2:
        raise ValueError("need at least 2 raters")
    n_items = len(rows[0])
    if any(len(r) != n_items for r in rows):
        raise ValueError("ragged ratings matrix")
    for j in range(n_items):
        vals = []
        for r in rows:
            v = r[j]
            if v is None or (isinstance(v, float) and math.isnan(v)):
                continue
            vals.append(v)
        units.append(vals)
    return units


def krippendorff_alpha_ordinal(
    ratings,
    scale_min: Optional[int] = None,
    scale_max: Optional[int] = None,
) -> float:
    """Krippendorff's alpha with the ordinal difference metric.

    ``ratings`` is raters x items; ``None`` or NaN marks a missing rating.
    Items with fewer than two ratings are not pairable and are ignored.
    Uses the coincidence-matrix form, alpha = 1 - (n-1) sum(o*d2) / sum(n_c n_k d2).
    """
    units = _ratings_units(ratings)
    for vals in units:
        for v in vals:
            if scale_min is not None and v < scale_min:
                raise ValueError(f"rating {v} below scale_min {scale_min}")
            if scale_max is not None and v > scale_max:
                raise ValueError(f"rating {v} above scale_max {scale_max}")
    units = [u for u in units if len(u) >= 2]
    if not units:
        raise ValueError("no pairable values")

    values = sorted({v for u in units for v in u})
    index = {v: i for i, v in enumerate(values)}
    k = len(values)
    coinc = np.zeros((k, k))
    for u in units:
        m = len(u)
        counts = Counter(index[v] for v in u)
        for c, nc in counts.items():
            for d, nd in counts.items():
                pairs = nc * (nd - 1) if c == d else nc * nd
                coinc[c, d] += pairs / (m - 1)

    marg = coinc.sum(axis=1)
    n = marg.sum()
    # ordinal metric: (sum_{g=c..k} n_g - (n_c + n_k)/2)^2
    cum = np.concatenate([[0.0], np.cumsum(marg)])
    c_idx, k_idx = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    lo, hi = np.minimum(c_idx, k_idx), np.maximum(c_idx, k_idx)
    delta2 = (cum[hi + 1] - cum[lo] - (marg[c_idx] + marg[k_idx]) / 2.0) ** 2

    observed = float((coinc * delta2).sum())
    expected = float((np.outer(marg, marg) * delta2).sum())
    if expected == 0:
        raise ValueError("no variance: all pairable ratings are identical")
    return float(1.0 - (n - 1) * observed / expected)


# ---------------------------------------------------------------------------
# paired t-test

_BETA_EPS = 1e-15
_BETA_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_TINY:
        d = _BETA_TINY
    d = 1.0 / d
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    if t2 < df:
        # near t = 0, df / (df + t^2) rounds to 1; use the complementary argument
        return 1.0 - betainc(0.5, df / 2.0, t2 / (df + t2))
    return betainc(df / 2.0, 0.5, df / (df + t2))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """Paired two-sided t-test; returns ``(t, p)``."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 pairs")
    d = [x - y for x, y in zip(a, b)]
    mean = math.fsum(d) / n
    var = math.fsum((x - mean) ** 2 for x in d) / (n - 1)
    if var == 0:
        raise ValueError("degenerate: differences have zero variance")
    t = mean / math.sqrt(var / n)
    return t, student_t_sf(t, n - 1)
