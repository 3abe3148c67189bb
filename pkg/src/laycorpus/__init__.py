"""Corpus engineering for lay-language summarization.

Sentence alignment of abstracts with lay summaries (GPSS), derived
simplification / background-explanation datasets, text metrics, and
retrieval-augmentation preprocessing.
"""
__version__ = "0.1.0"

from .align import AlignmentPair, AlignmentResult, align_documents, build_score_matrix, gpss
from .corpus import (
    CorpusFormatError,
    DerivedPair,
    ParallelRecord,
    SplitRatios,
    corpus_statistics,
    corrupt_for_pretraining,
    derive_background_pairs,
    derive_plainness_training,
    derive_simplification_pairs,
    filter_outliers,
    load_corpus,
    split_corpus,
)
from .metrics import (
    PRF,
    FrequencyTable,
    bert_score,
    cohens_kappa,
    coleman_liau,
    krippendorff_alpha_ordinal,
    lcs_length,
    paired_t_test,
    rouge_l,
    word_familiarity,
)
from .retrieval import (
    EmbeddingIndex,
    HashEmbeddingProvider,
    LexiconEntry,
    RetrievalHit,
    augment_with_definitions,
    build_index,
    extract_keywords,
    match_terms,
    rag_sequence_marginalize,
    retrieve_top_k,
)
from .text import Sentence, Token, TokenizedDocument, split_sentences, text_counts, tokenize
