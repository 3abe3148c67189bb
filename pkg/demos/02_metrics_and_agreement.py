"""
Readability, overlap and rater agreement
========================================

The text metrics used to compare an abstract with its lay version, and the
agreement statistics used for human ratings.
"""
import numpy as np

from laycorpus import metrics
from laycorpus.text import text_counts, word_tokens

abstract = "Phylogenetic reconstruction indicates a single introduction event."
lay = "The virus most likely arrived only once."

# ROUGE-L: longest common subsequence over word tokens.
cand, ref = word_tokens("the cat sat"), word_tokens("the cat on the mat")
print("ROUGE-L the cat sat / the cat on the mat:", metrics.rouge_l(cand, ref))

# Coleman-Liau grade level works on letters and sentences per 100 words,
# so longer words push the grade up.
for name, text in [("abstract", abstract), ("lay", lay)]:
    print(f"Coleman-Liau {name:8s} {metrics.coleman_liau(text_counts(text)):6.2f}")

# Word familiarity: mean ln(N / df) against a document-frequency table.
# Rare words have high values; unseen words count as df = 1.
table = metrics.FrequencyTable.from_documents(
    ["the virus arrived once", "the virus spread", "a single event", "the cat sat"]
)
for name, text in [("abstract", abstract), ("lay", lay)]:
    print(f"familiarity  {name:8s} {metrics.word_familiarity(word_tokens(text), table):6.3f}")

# BERTScore-style matching on token vectors: each candidate token is paired
# with its most similar reference token by cosine.
rng = np.random.default_rng(0)
ref_vecs = rng.normal(size=(5, 8))
cand_vecs = ref_vecs[:3] + 0.1 * rng.normal(size=(3, 8))
print("BERTScore (noisy prefix):", metrics.bert_score(cand_vecs, ref_vecs))

# Two annotators labelling four items.
print("Cohen's kappa:", metrics.cohens_kappa([1, 1, 0, 0], [1, 0, 0, 0]))

# Three raters scoring six summaries on a 1-5 scale; None is a missing rating.
ratings = [
    [1, 2, 3, 3, 2, 4],
    [1, 2, 3, 3, 2, 5],
    [None, 3, 3, 3, 2, 4],
]
print("Krippendorff alpha (ordinal):", round(metrics.krippendorff_alpha_ordinal(ratings), 4))

# Paired t-test on readability: is the abstract harder to read than its summary?
src_grades = [14.1, 15.3, 12.8, 16.0, 13.5]
tgt_grades = [9.2, 10.1, 9.8, 11.0, 8.7]
t, p = metrics.paired_t_test(src_grades, tgt_grades)
print(f"paired t = {t:.3f}, two-sided p = {p:.2e}")
