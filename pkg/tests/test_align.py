import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laycorpus.align import align_documents, build_score_matrix, gpss
from laycorpus.corpus import load_corpus
from laycorpus.text import split_sentences

from oracles import gpss_reference

GRID = [round(0.1 * k, 1) for k in range(11)]


def as_pairs(result):
    return [(p.src_index, p.tgt_index) for p in result.pairs]


def test_score_matrix_shapes():
    assert build_score_matrix([], split_sentences("A b. C d.")).shape == (0, 2)
    assert build_score_matrix(split_sentences("A b."), []).shape == (1, 0)


def test_score_matrix_identity_diagonal():
    sents = split_sentences("Alpha beta gamma. Delta epsilon. Zeta eta theta iota.")
    m = build_score_matrix(sents, sents)
    assert np.all(np.diag(m) == 1.0)


def test_score_matrix_hand_value():
    m = build_score_matrix(split_sentences("a b c"), split_sentences("a b d"))
    assert m.shape == (1, 1)
    assert m[0, 0] == pytest.approx(2 / 3)


def test_score_matrix_orientation():
    # target is the ROUGE candidate, source the reference: P = lcs/|tgt|
    src = split_sentences("a b c d")
    tgt = split_sentences("a b")
    assert build_score_matrix(src, tgt)[0, 0] == pytest.approx(2 * 1.0 * 0.5 / 1.5)


def test_gpss_empty():
    res = gpss(np.zeros((0, 3)))
    assert res.pairs == () and res.src_labels == () and res.tgt_labels == (False,) * 3


def test_gpss_single_cell():
    res = gpss([[0.9]])
    assert [(p.src_index, p.tgt_index, p.score) for p in res.pairs] == [(0, 0, 0.9)]
    assert res.src_labels == (True,) and res.tgt_labels == (True,)


def test_gpss_diagonal():
    assert as_pairs(gpss([[0.9, 0.1], [0.2, 0.8]])) == [(0, 0), (1, 1)]


def test_gpss_off_diagonal_blocks_rest():
    res = gpss([[0.1, 0.9], [0.2, 0.3]])
    assert as_pairs(res) == [(0, 1)]
    assert res.src_labels == (True, False)
    assert res.tgt_labels == (False, True)


def test_gpss_ties_smallest_src_then_tgt():
    assert as_pairs(gpss([[0.5, 0.5], [0.5, 0.5]])) == [(0, 0), (1, 1)]
    # (0,1) wins the tie over (0,2) and (1,0); the zero cell (1,2) is still eligible
    assert as_pairs(gpss([[0.0, 0.7, 0.7], [0.7, 0.0, 0.0]])) == [(0, 1), (1, 2)]


def test_gpss_zero_cells_selected():
    assert as_pairs(gpss(np.zeros((2, 3)))) == [(0, 0), (1, 1)]


def test_gpss_min_score_filter():
    m = [[0.9, 0.1], [0.2, 0.3]]
    assert as_pairs(gpss(m, 0.0)) == [(0, 0), (1, 1)]
    res = gpss(m, 0.5)
    assert as_pairs(res) == [(0, 0)]
    assert res.src_labels == (True, False)


def test_gpss_rejects_bad_min_score():
    with pytest.raises(ValueError):
        gpss([[0.5]], 1.1)


def test_to_dict_labels():
    d = gpss([[0.1, 0.9], [0.2, 0.3]]).to_dict()
    assert d == {
        "pairs": [{"src": 0, "tgt": 1, "score": 0.9}],
        "src_labels": ["matched", "unmatched"],
        "tgt_labels": ["unmatched", "matched"],
    }


matrices = st.integers(0, 6).flatmap(
    lambda r: st.integers(0, 6).flatmap(
        lambda c: st.lists(
            st.lists(st.sampled_from(GRID), min_size=c, max_size=c), min_size=r, max_size=r
        ).map(lambda rows: (rows, r, c))
    )
)


@settings(max_examples=300)
@given(matrices)
def test_gpss_matches_reference(m):
    rows, r, c = m
    arr = np.array(rows, dtype=float).reshape(r, c)
    res = gpss(arr)
    assert as_pairs(res) == (gpss_reference(rows) if r and c else [])
    assert len(res.pairs) <= min(r, c)


def replay_is_greedy(arr, pairs):
    """Each selected pair must be the first argmax of the rectangle it was drawn from."""
    chosen = {(p.src_index, p.tgt_index) for p in pairs}

    def check(s0, s1, t0, t1):
        if s0 >= s1 or t0 >= t1:
            return True
        block = arr[s0:s1, t0:t1]
        i, j = np.unravel_index(np.argmax(block), block.shape)
        i, j = i + s0, j + t0
        if (i, j) not in chosen:
            return False
        return check(s0, i, t0, j) and check(i + 1, s1, j + 1, t1)

    return check(0, arr.shape[0], 0, arr.shape[1])


@settings(max_examples=100)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_gpss_structure(r, c, seed):
    arr = np.random.default_rng(seed).random((r, c))
    res = gpss(arr)
    src = [p.src_index for p in res.pairs]
    tgt = [p.tgt_index for p in res.pairs]
    assert src == sorted(set(src)) and tgt == sorted(set(tgt))
    assert replay_is_greedy(arr, res.pairs)
    assert res == gpss(arr.copy())


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1))
def test_min_score_post_filter_monotone(r, c, seed, a, b):
    lo, hi = sorted((a, b))
    arr = np.random.default_rng(seed).random((r, c))
    loose, strict = as_pairs(gpss(arr, lo)), as_pairs(gpss(arr, hi))
    assert set(strict) <= set(loose)
    assert strict == [p for p in loose if p in set(strict)]


def test_align_documents_empty():
    res = align_documents("", "Something here.")
    assert res.pairs == () and res.src_labels == ()


def test_align_documents_identity():
    text = "Mosquitoes carry the virus. Infection causes fever. Most people recover fully."
    res = align_documents(text, text)
    assert as_pairs(res) == [(0, 0), (1, 1), (2, 2)]
    assert all(p.score == 1.0 for p in res.pairs)


def test_align_documents_matches_golden(fixture_corpus, fixtures_dir):
    golden = [json.loads(line) for line in open(fixtures_dir / "golden_alignment.jsonl")]
    records = list(load_corpus(fixture_corpus))
    assert len(records) == len(golden) == 50
    for rec, g in zip(records, golden):
        res = align_documents(rec.source, rec.target)
        assert rec.id == g["id"]
        assert len(res.src_labels) == g["n_src"] and len(res.tgt_labels) == g["n_tgt"]
        assert res.to_dict()["pairs"] == g["pairs"]
