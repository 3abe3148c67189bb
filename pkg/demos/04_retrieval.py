"""
Adding background knowledge to a source
=======================================

Lexicon matching, keyword extraction with a hash embedding, definition
augmentation under a token budget, exact inner-product retrieval and
RAG-Sequence marginalisation.
"""
import math
import tempfile
from pathlib import Path

import numpy as np

from laycorpus import retrieval

lexicon = [
    retrieval.LexiconEntry("zika virus", "A flavivirus spread by Aedes mosquitoes."),
    retrieval.LexiconEntry("microcephaly", "A birth defect in which the head is smaller than expected."),
    retrieval.LexiconEntry("virus", "An infectious agent that replicates inside cells."),
]
source = "Zika virus infection in pregnancy can cause microcephaly. The virus persists in semen."

# Longest-match term lookup: "zika virus" wins over the shorter "virus",
# and each entity is reported once.
terms = retrieval.match_terms(source, lexicon)
print("matched terms:", [e for e, _ in terms])

# Keywords ranked by cosine to the whole document. The hash provider is a
# deterministic stand-in for a sentence encoder.
provider = retrieval.HashEmbeddingProvider(dim=64, seed=0)
print("keywords:", retrieval.extract_keywords(source, provider, m=3))

# Definitions are appended whole; those that would overflow the budget are dropped.
for budget in (1024, 25):
    aug = retrieval.augment_with_definitions(source, terms, token_budget=budget)
    print(f"budget {budget}: {len(aug.additions)} definitions -> {aug.rendered}")

# A tiny dense index, written to and read back from the binary format.
rng = np.random.default_rng(0)
docs = {f"doc{i}": rng.normal(size=16) for i in range(50)}
index = retrieval.build_index(docs.items())
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "docs.embf"
    retrieval.write_index(index, path)
    index = retrieval.read_index(path)
    print(f"index file: {path.stat().st_size} bytes for {len(index)} x {index.dimension}")

query = docs["doc7"] + 0.3 * rng.normal(size=16)
hits = retrieval.retrieve_top_k(index, query)  # k defaults to 5
for h in hits:
    print(f"  {h.doc_id:6s} ip={h.inner_product:7.3f} prior={h.prior:.3f}")

# Given per-document generator log-likelihoods for one output, the
# sequence-level score is log sum_z p(z|s) p(t|s,z).
log_likelihoods = [-12.0, -15.5, -14.0, -20.0, -13.2]
print("log p(t|s) =", round(retrieval.rag_sequence_marginalize(hits, log_likelihoods), 4))
print("check: log 0.3 =", math.log(0.3), "vs",
      retrieval.rag_sequence_marginalize(
          [retrieval.RetrievalHit("a", 0, 0.5), retrieval.RetrievalHit("b", 0, 0.5)],
          [math.log(0.2), math.log(0.4)]))
