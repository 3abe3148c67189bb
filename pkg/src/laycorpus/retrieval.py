"""Retrieval-augmentation preprocessing.

Two ways of adding outside knowledge to a source abstract:

* definition-based: find lexicon terms (or embedding-ranked keywords) in
  the source and append their definitions;
* embedding-based: exact maximum-inner-product search over a fixed
  document index, softmax priors over the top k, and RAG-Sequence
  marginalization of per-document generator log-likelihoods.

Encoders are not part of this package. Vectors come from files or from
any callable ``provider(text) -> vector``; :class:`HashEmbeddingProvider`
is a deterministic stand-in for tests and demos.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .rng import SplitMix64, derive_seed
from .text import tokenize, word_tokens

__all__ = [
    "LexiconEntry",
    "AugmentedSource",
    "EmbeddingIndex",
    "RetrievalHit",
    "HashEmbeddingProvider",
    "KeywordProviderError",
    "STOPWORDS",
    "load_lexicon",
    "match_terms",
    "extract_keywords",
    "augment_with_definitions",
    "build_index",
    "write_index",
    "read_index",
    "read_query",
    "retrieve_top_k",
    "softmax",
    "rag_sequence_marginalize",
]

INDEX_MAGIC = b"EMBF"
INDEX_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")

STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be because
    been before being below between both but by can could did do does doing
    down during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just may me
    might more most must my myself no nor not of off on once only or other our
    ours ourselves out over own same she should so some such than that the
    their theirs them themselves then there these they this those through to
    too under until up upon very was we were what when where which while who
    whom why will with within without would you your yours yourself
    yourselves also however thus therefore using used use via whether
    """.split()
)


# ---------------------------------------------------------------------------
# lexicon matching


class LexiconEntry(NamedTuple):
    entity: str
    definition: str


def _check_lexicon(lexicon: Sequence[LexiconEntry]) -> None:
    seen = set()
    for e in lexicon:
        if not e.entity.strip() or not e.definition.strip():
            raise ValueError(f"lexicon entry with empty field: {e!r}")
        key = e.entity.casefold()
        if key in seen:
            raise ValueError(f"duplicate lexicon entity {e.entity!r}")
        seen.add(key)


def load_lexicon(path) -> List[LexiconEntry]:
    """Read ``entity<TAB>definition`` lines."""
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '<entity>\\t<definition>'")
            entries.append(LexiconEntry(parts[0], parts[1]))
    try:
        _check_lexicon(entries)
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from None
    return entries


def match_terms(source: str, lexicon: Sequence[LexiconEntry]) -> List[Tuple[str, str]]:
    """Longest-match lexicon lookup over the source's word tokens.

    Matching is case-insensitive and ignores punctuation. At each position
    the longest entity wins and the scan resumes after it, so matches never
    overlap. Each entity is reported once, in order of first occurrence.
    """
    _check_lexicon(lexicon)
    by_tokens = {}
    for e in lexicon:
        key = tuple(word_tokens(e.entity))
        if key and key not in by_tokens:
            by_tokens[key] = e
    if not by_tokens:
        return []
    longest = max(len(k) for k in by_tokens)

    words = word_tokens(source)
    found: List[Tuple[str, str]] = []
    reported = set()
    i = 0
    while i < len(words):
        for n in range(min(longest, len(words) - i), 0, -1):
            entry = by_tokens.get(tuple(words[i:i + n]))
            if entry is not None:
                if entry.entity not in reported:
                    reported.add(entry.entity)
                    found.append((entry.entity, entry.definition))
                i += n
                break
        else:
            i += 1
    return found


# ---------------------------------------------------------------------------
# keyword extraction


class KeywordProviderError(RuntimeError):
    def __init__(self, phrase: str, cause: BaseException):
        self.phrase = phrase
        super().__init__(f"embedding provider failed on {phrase!r}: {cause}")


class HashEmbeddingProvider:
    """Deterministic bag-of-words embeddings without an encoder.

    Each word token maps to a unit vector whose components are uniform in
    [-1, 1), drawn from ``SplitMix64(derive_seed(seed, token))``. A text's
    vector is the sum of its word vectors, so phrases sharing words are
    similar. The empty text maps to the zero vector.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._cache = {}

    def token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            rng = SplitMix64(derive_seed(self.seed, token))
            vec = np.array([2.0 * rng.random() - 1.0 for _ in range(self.dim)])
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def __call__(self, text: str) -> np.ndarray:
        out = np.zeros(self.dim)
        for w in word_tokens(text):
            out += self.token_vector(w)
        return out


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def candidate_phrases(source: str, ngram_max: int = 3) -> List[str]:
    """Distinct word n-grams (1..ngram_max) in first-occurrence order.

    N-grams do not cross punctuation and may not start or end with a
    stopword.
    """
    runs, cur = [], []
    for tok in tokenize(source):
        if tok.is_word:
            cur.append(tok.text)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)

    seen, out = set(), []
    for run in runs:
        for i in range(len(run)):
            for n in range(1, ngram_max + 1):
                gram = run[i:i + n]
                if len(gram) < n:
                    break
                if gram[0] in STOPWORDS or gram[-1] in STOPWORDS:
                    continue
                phrase = " ".join(gram)
                if phrase not in seen:
                    seen.add(phrase)
                    out.append(phrase)
    return out


def extract_keywords(
    source: str,
    provider: Callable[[str], Sequence[float]],
    m: int = 3,
    ngram_max: int = 3,
) -> List[str]:
    """Top ``m`` candidate phrases by cosine similarity to the whole source."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if ngram_max < 1:
        raise ValueError("ngram_max must be at least 1")

    def embed(text):
        try:
            return np.asarray(provider(text), dtype=np.float64)
        except Exception as e:
            raise KeywordProviderError(text, e) from e

    doc = embed(source)
    candidates = candidate_phrases(source, ngram_max)
    scored = [(-_cosine(embed(c), doc), pos, c) for pos, c in enumerate(candidates)]
    scored.sort()
    return [c for _, _, c in scored[:m]]


# ---------------------------------------------------------------------------
# rendering augmented sources


@dataclass(frozen=True)
class AugmentedSource:
    original: str
    additions: Tuple[Tuple[str, str], ...]
    rendered: str
    token_budget: int


def augment_with_definitions(
    source: str,
    additions: Sequence[Tuple[str, str]],
    token_budget: int = 1024,
) -> AugmentedSource:
    """Append ``entity: definition`` segments to ``source``.

    Rendered as ``source | e1: d1 ; e2: d2``. Definitions are added whole,
    in order, until the next one would push the word count past
    ``token_budget``; it and everything after it are dropped.
    """
    used = len(word_tokens(source))
    if token_budget <= used:
        raise ValueError(f"token_budget {token_budget} does not exceed source length {used}")
    kept = []
    for entity, definition in additions:
        cost = len(word_tokens(entity)) + len(word_tokens(definition))
        if used + cost > token_budget:
            break
        used += cost
        kept.append((entity, definition))
    if not kept:
        rendered = source
    else:
        rendered = source + " | " + " ; ".join(f"{e}: {d}" for e, d in kept)
    return AugmentedSource(source, tuple(kept), rendered, token_budget)


# ---------------------------------------------------------------------------
# dense index


class EmbeddingIndex:
    """Immutable (doc_id, vector) store with exhaustive inner-product search."""

    def __init__(self, ids: Sequence[str], vectors: np.ndarray):
        self.ids = tuple(ids)
        vectors = np.array(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(vectors) != len(self.ids):
            raise ValueError("vectors must be a (count, dim) array matching ids")
        vectors.setflags(write=False)
        self.vectors = vectors
        self._pos = {doc_id: i for i, doc_id in enumerate(self.ids)}

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(zip(self.ids, self.vectors))

    def vector(self, doc_id: str) -> np.ndarray:
        return self.vectors[self._pos[doc_id]]


def build_index(entries: Iterable[Tuple[str, Sequence[float]]]) -> EmbeddingIndex:
    ids, rows = [], []
    seen = set()
    dim = None
    for doc_id, vec in entries:
        v = np.asarray(vec, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"document {doc_id!r}: vector must be a non-empty 1-d array")
        if dim is None:
            dim = v.size
        elif v.size != dim:
            raise ValueError(f"document {doc_id!r}: dimension {v.size}, expected {dim}")
        if not np.isfinite(v).all():
            raise ValueError(f"document {doc_id!r}: non-finite component")
        if doc_id in seen:
            raise ValueError(f"duplicate document id {doc_id!r}")
        seen.add(doc_id)
        ids.append(doc_id)
        rows.append(v)
    if not rows:
        return EmbeddingIndex([], np.zeros((0, 0)))
    return EmbeddingIndex(ids, np.vstack(rows))


def _ids_path(path, ids_path) -> Path:
    return Path(ids_path) if ids_path is not None else Path(str(path) + ".ids")


def write_index(index: EmbeddingIndex, path, ids_path=None) -> None:
    """Write the ``EMBF`` binary (float32 LE rows) and the id sidecar."""
    dim = index.dimension if len(index) else 0
    with open(path, "wb") as f:
        f.write(_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, dim, len(index)))
        f.write(np.ascontiguousarray(index.vectors, dtype="<f4").tobytes())
    with open(_ids_path(path, ids_path), "w", encoding="utf-8", newline="\n") as f:
        for doc_id in index.ids:
            if "\n" in doc_id or "\r" in doc_id:
                raise ValueError(f"document id {doc_id!r} contains a line break")
            f.write(doc_id + "\n")


def _read_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(data)
    if magic != INDEX_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != INDEX_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 4 * dim * count
    if len(data) != expected:
        raise ValueError(f"{path}: header promises {count} x {dim} floats, file size {len(data)} != {expected}")
    mat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    if not np.isfinite(mat).all():
        bad = int(np.argwhere(~np.isfinite(mat))[0, 0])
        raise ValueError(f"{path}: row {bad} contains NaN or Inf")
    return mat.astype(np.float64)


def read_index(path, ids_path=None) -> EmbeddingIndex:
    mat = _read_matrix(path)
    id_file = _ids_path(path, ids_path)
    with open(id_file, encoding="utf-8") as f:
        ids = [line.rstrip("\n") for line in f]
    if len(ids) != len(mat):
        raise ValueError(f"{id_file}: {len(ids)} ids for {len(mat)} vectors")
    return build_index(zip(ids, mat))


def read_query(path) -> np.ndarray:
    """Read a single query vector stored as an ``EMBF`` file with count 1."""
    mat = _read_matrix(path)
    if len(mat) != 1:
        raise ValueError(f"{path}: query file must hold exactly one vector, found {len(mat)}")
    return mat[0]


# ---------------------------------------------------------------------------
# search and marginalization


class RetrievalHit(NamedTuple):
    doc_id: str
    inner_product: float
    prior: float


def softmax(logits) -> np.ndarray:
    x = np.asarray(logits, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def retrieve_top_k(index: EmbeddingIndex, query, k: int = 5) -> List[RetrievalHit]:
    """Exact top-k by inner product, best first; ties keep index order.

    Priors are the softmax of the returned inner products, i.e.
    normalized over the retrieved k rather than the whole index.
    """
    if len(index) == 0:
        raise ValueError("cannot query an empty index")
    if k < 1:
        raise ValueError("k must be at least 1")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (index.dimension,):
        raise ValueError(f"query dimension {q.shape} does not match index dimension {index.dimension}")
    scores = index.vectors @ q
    top = np.argsort(-scores, kind="stable")[:k]
    priors = softmax(scores[top])
    return [RetrievalHit(index.ids[i], float(scores[i]), float(p)) for i, p in zip(top, priors)]


def rag_sequence_marginalize(
    hits: Sequence[RetrievalHit], log_likelihoods: Sequence[float]
) -> float:
    """``log sum_z prior(z) * exp(loglik(z))`` evaluated stably.

    ``log_likelihoods[i]`` is the generator's sequence log-likelihood
    given ``hits[i]``. The sum uses ``math.fsum`` so the result does not
    depend on the order of the hits.
    """
    if len(hits) != len(log_likelihoods):
        raise ValueError(f"length mismatch: {len(hits)} hits, {len(log_likelihoods)} scores")
    if not hits:
        raise ValueError("no hits to marginalize over")
    total = math.fsum(h.prior for h in hits)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"priors must sum to 1, got {total!r}")
    terms = []
    for h, ll in zip(hits, log_likelihoods):
        if not math.isfinite(ll):
            raise ValueError(f"non-finite log-likelihood for {h.doc_id!r}")
        if h.prior < 0:
            raise ValueError(f"negative prior for {h.doc_id!r}")
        if h.prior > 0:
            terms.append(math.log(h.prior) + ll)
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))
