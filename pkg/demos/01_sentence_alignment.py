"""
Aligning an abstract with its lay summary
=========================================

Walks through the greedy paired sentence search on one small record:
split both sides into sentences, score every pair with ROUGE-L, then let
GPSS pick a monotone set of matches.
"""
import numpy as np

from laycorpus import align_documents, build_score_matrix, gpss, split_sentences

abstract = (
    "Zika virus is a mosquito-borne flavivirus. "
    "Infection during pregnancy is associated with microcephaly in newborns. "
    "We sequenced 110 isolates from 12 countries. "
    "Phylogenetic analysis dates the introduction to late 2013."
)
lay_summary = (
    "Zika is a virus spread by mosquitoes. "
    "When pregnant women are infected, their babies can be born with small heads. "
    "By reading the genes of the virus, we found it probably arrived in 2013."
)

src = split_sentences(abstract)
tgt = split_sentences(lay_summary)
print(f"{len(src)} source sentences, {len(tgt)} target sentences")

# Rows are abstract sentences, columns lay sentences. Each cell is the
# ROUGE-L F1 of the lay sentence (candidate) against the abstract sentence.
scores = build_score_matrix(src, tgt)
np.set_printoptions(precision=3, suppress=True)
print(scores)

# GPSS takes the best cell, then recurses into the rectangles above-left
# and below-right of it, so matches never cross.
result = gpss(scores)
for p in result.pairs:
    print(f"  src[{p.src_index}] <-> tgt[{p.tgt_index}]  score={p.score:.3f}")
    print(f"      {src[p.src_index].text}")
    print(f"      {tgt[p.tgt_index].text}")

# Unmatched abstract sentences are the ones the lay author dropped.
dropped = [s.text for s, hit in zip(src, result.src_labels) if not hit]
print("unmatched in the abstract:", dropped)

# A score floor is applied after the search, never during it.
strict = align_documents(abstract, lay_summary, min_score=0.3)
print("pairs with score >= 0.3:", [(p.src_index, p.tgt_index) for p in strict.pairs])
