"""
From a parallel corpus to training data
=======================================

Filtering, splitting and the three derived datasets (sentence
simplification, background explanation, plainness classification), plus
the corruption used for denoising pretraining.
"""
from laycorpus import corpus

record = corpus.ParallelRecord(
    id="demo-1",
    journal="eLife",
    source=(
        "Malaria parasites invade red blood cells using the RH5 protein. "
        "We solved the structure of RH5 bound to basigin. "
        "Antibodies against RH5 blocked invasion in culture."
    ),
    target=(
        "Malaria is caused by parasites that live inside red blood cells. "
        "To get in, they use a protein called RH5. "
        "We found the shape of RH5 when it grabs the cell. "
        "Antibodies against RH5 stopped the parasites getting in."
    ),
)

# Outlier filtering looks at lexical overlap and length. This record is far
# shorter than the default 50-word floor, so lower it for the demo.
kept, dropped = corpus.filter_outliers([record], len_low=5)
print("kept:", [r.id for r in kept], "dropped:", [(d.record.id, d.reasons) for d in dropped])

# Sentence-level simplification pairs come straight from the GPSS alignment.
for pair in corpus.derive_simplification_pairs(record, min_len=3):
    print(f"[{pair.id}] {pair.source_text}\n    -> {pair.target_text}")

# Background explanation: cut both texts just before the second aligned
# pair. The lay prefix is longer than the abstract prefix because the
# summary spends a sentence on background before the first new finding.
bg = corpus.derive_background_pairs(record, boundary_n=2)
print(f"[{bg.id}] source: {bg.source_text!r}\n    lay:    {bg.target_text!r}")

# Plainness data: every aligned pair yields one label-0 and one label-1 row.
rows = corpus.derive_plainness_training([record], min_len=3)
print("plainness labels:", [y for _, y in rows])

# Corruption for pretraining: shuffle sentences, then mask about 15% of words.
corrupted, original = corpus.corrupt_for_pretraining(record.source, seed=42)
print("corrupted:", corrupted)

# Splits are drawn with a seeded SplitMix64 permutation, so the same seed
# always gives the same membership; each part keeps input order.
records = [corpus.ParallelRecord(f"r{i}", "PNAS", "s", "t") for i in range(20)]
train, valid, test = corpus.split_corpus(records, corpus.SplitRatios(0.7, 0.2, 0.1, seed=3))
print("test ids:", [r.id for r in test])
