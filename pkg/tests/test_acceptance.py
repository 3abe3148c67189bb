"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline;
they are also repeated in the terminal summary of every pytest run.
"""
import json
import math
import random
import shutil
import time

import numpy as np

from laycorpus import cli
from laycorpus.align import gpss
from laycorpus.corpus import (
    SplitRatios,
    derive_background_pairs,
    derive_plainness_training,
    derive_simplification_pairs,
    load_corpus,
    split_corpus,
)
from laycorpus.metrics import (
    coleman_liau,
    cohens_kappa,
    krippendorff_alpha_ordinal,
    paired_t_test,
    rouge_l,
)
from laycorpus.retrieval import (
    EmbeddingIndex,
    RetrievalHit,
    build_index,
    rag_sequence_marginalize,
    retrieve_top_k,
    write_index,
)
from laycorpus.text import text_counts

from oracles import (
    gpss_reference,
    krippendorff_alpha_coincidence,
    lcs_brute_force,
    rouge_l_f1,
    softmax_reference,
)


def test_rouge_l_oracle_equivalence(criterion):
    rng = random.Random(1)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        cand = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        ref = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        got = rouge_l(cand, ref)
        lcs = lcs_brute_force(cand, ref)
        expected_p = lcs / len(cand) if cand else 0.0
        expected_r = lcs / len(ref) if ref else 0.0
        if (got.precision, got.recall) != (expected_p, expected_r) or got.f1 != rouge_l_f1(cand, ref, lcs=lcs_brute_force):
            mismatches += 1
    elapsed = time.perf_counter() - start
    criterion(
        "ROUGE-L oracle equivalence (1000 pairs, exact, < 10 s)",
        mismatches == 0 and elapsed < 10,
        f"{mismatches} mismatches in {elapsed:.2f}s",
    )


def test_rouge_l_hand_case(criterion):
    f1 = rouge_l(["the", "cat", "sat"], ["the", "cat", "on", "the", "mat"]).f1
    criterion("ROUGE-L hand case F1 = 0.5 exactly", f1 == 0.5, f"F1={f1!r}")


def _greedy_replay_ok(arr, pairs):
    chosen = {(p.src_index, p.tgt_index) for p in pairs}
    stack, visited = [(0, arr.shape[0], 0, arr.shape[1])], 0
    while stack:
        s0, s1, t0, t1 = stack.pop()
        if s0 >= s1 or t0 >= t1:
            continue
        block = arr[s0:s1, t0:t1]
        best = block.max()
        # first maximal cell in (src, tgt) order, located without argmax
        rows, cols = np.nonzero(block == best)
        i, j = int(rows[0]) + s0, int(cols[0]) + t0
        if (i, j) not in chosen:
            return False
        visited += 1
        stack += [(s0, i, t0, j), (i + 1, s1, j + 1, t1)]
    return visited == len(chosen)


def test_gpss_oracle_and_structure(criterion):
    rng = random.Random(2)
    grid = [k / 10 for k in range(11)]
    start = time.perf_counter()
    mismatches = 0
    for _ in range(3000):
        r, c = rng.randint(1, 6), rng.randint(1, 6)
        rows = [[rng.choice(grid) for _ in range(c)] for _ in range(r)]
        got = [(p.src_index, p.tgt_index) for p in gpss(np.array(rows)).pairs]
        mismatches += got != gpss_reference(rows)
    structural = 0
    nrng = np.random.default_rng(2)
    for _ in range(10_000):
        arr = nrng.random((20, 20))
        pairs = gpss(arr).pairs
        src = [p.src_index for p in pairs]
        tgt = [p.tgt_index for p in pairs]
        monotone = all(a < b for a, b in zip(src, src[1:])) and all(a < b for a, b in zip(tgt, tgt[1:]))
        structural += not (monotone and _greedy_replay_ok(arr, pairs))
    elapsed = time.perf_counter() - start
    criterion(
        "GPSS oracle equivalence (3000 matrices <= 6x6) + structure (10000 20x20), < 60 s",
        mismatches == 0 and structural == 0 and elapsed < 60,
        f"{mismatches} oracle mismatches, {structural} structural failures, {elapsed:.1f}s",
    )


def test_coleman_liau(criterion):
    value = coleman_liau(text_counts("The cat sat."))
    text = "Mosquitoes spread the virus. Most infected people never notice symptoms!"
    dup = coleman_liau(text_counts(text + " " + text)) == coleman_liau(text_counts(text))
    criterion(
        "Coleman-Liau 'The cat sat.' = -8.0267 +- 1e-4; duplication invariance exact",
        abs(value - (-8.0267)) <= 1e-4 and dup,
        f"value={value:.6f}, duplication exact={dup}",
    )


def test_mips(criterion):
    rng = np.random.default_rng(3)
    mismatches, worst_sum, worst_shift = 0, 0.0, 0.0
    for _ in range(1000):
        n, d = int(rng.integers(1, 1001)), int(rng.integers(1, 65))
        k = int(rng.integers(1, n + 1))
        vecs = rng.normal(size=(n, d))
        q = rng.normal(size=d)
        hits = retrieve_top_k(EmbeddingIndex([str(i) for i in range(n)], vecs), q, k)
        scores = vecs @ q
        expected = np.argsort(-scores, kind="stable")[:k]
        mismatches += [h.doc_id for h in hits] != [str(i) for i in expected]
        priors = [h.prior for h in hits]
        worst_sum = max(worst_sum, abs(math.fsum(priors) - 1.0))
        mismatches += any(abs(a - b) > 1e-12 for a, b in zip(priors, softmax_reference(scores[expected])))
        # appending a constant coordinate of 10 (query 1) shifts every inner product by 10
        shifted = EmbeddingIndex([str(i) for i in range(n)], np.hstack([vecs, np.full((n, 1), 10.0)]))
        moved = retrieve_top_k(shifted, np.append(q, 1.0), k)
        worst_shift = max(worst_shift, max(abs(a.prior - b.prior) for a, b in zip(hits, moved)))
    criterion(
        "MIPS = argsort oracle (1000 trials); priors sum 1 +- 1e-9; shift by 10 invariant +- 1e-12",
        mismatches == 0 and worst_sum <= 1e-9 and worst_shift <= 1e-12,
        f"{mismatches} mismatches, max |sum-1|={worst_sum:.1e}, max shift delta={worst_shift:.1e}",
    )


def test_rag_marginalization(criterion, tmp_path):
    hits = [RetrievalHit("a", 0.0, 0.5), RetrievalHit("b", 0.0, 0.5)]
    lls = [math.log(0.2), math.log(0.4)]
    value = rag_sequence_marginalize(hits, lls)
    hand = abs(value - math.log(0.3)) <= 1e-12

    rng = random.Random(5)
    perm_ok = True
    for _ in range(200):
        k = rng.randint(1, 8)
        w = [rng.random() + 0.01 for _ in range(k)]
        priors = softmax_reference([math.log(x) for x in w])
        hs = [RetrievalHit(str(i), 0.0, p) for i, p in enumerate(priors)]
        ls = [rng.uniform(-300, 0) for _ in range(k)]
        base = rag_sequence_marginalize(hs, ls)
        order = list(range(k))
        rng.shuffle(order)
        perm_ok &= rag_sequence_marginalize([hs[i] for i in order], [ls[i] for i in order]) == base

    index = tmp_path / "idx.embf"
    write_index(build_index((f"d{i}", [float(i), 1.0]) for i in range(8)), index)
    out = tmp_path / "r.json"
    code = cli.main(["retrieve", str(index), str(out), "--query", "[1, 0]"])
    manifest = json.loads((tmp_path / "r.json.manifest.json").read_text())
    k_ok = code == 0 and manifest["parameters"]["k"] == 5 and len(json.loads(out.read_text())["hits"]) == 5
    criterion(
        "RAG marginalization log 0.3 +- 1e-12; permutation invariance exact; default k=5 in manifest",
        hand and perm_ok and k_ok,
        f"|value-log 0.3|={abs(value - math.log(0.3)):.1e}, permutation exact={perm_ok}, manifest k={manifest['parameters']['k']}",
    )


def test_agreement(criterion):
    kappa = cohens_kappa([1, 1, 0, 0], [1, 0, 0, 0])
    perfect_kappa = cohens_kappa([3, 1, 2, 2, 5], [3, 1, 2, 2, 5])
    perfect_alpha = krippendorff_alpha_ordinal([[1, 2, 3, 4, 5, 2], [1, 2, 3, 4, 5, 2], [1, 2, 3, 4, 5, 2]])
    rng = random.Random(7)
    checked, worst = 0, 0.0
    while checked < 200:
        m = [[rng.choice([1, 2, 3, 4, 5]) for _ in range(6)] for _ in range(3)]
        if len({v for row in m for v in row}) < 2:
            continue
        units = [[row[j] for row in m] for j in range(6)]
        worst = max(worst, abs(krippendorff_alpha_ordinal(m) - krippendorff_alpha_coincidence(units)))
        checked += 1
    criterion(
        "Agreement: kappa = 0.5 +- 1e-12; perfect kappa = alpha = 1 exactly; alpha = coincidence reference (200 3x6) +- 1e-9",
        abs(kappa - 0.5) <= 1e-12 and perfect_kappa == 1.0 and perfect_alpha == 1.0 and worst <= 1e-9,
        f"kappa={kappa!r}, perfect=({perfect_kappa}, {perfect_alpha}), max alpha diff={worst:.1e}",
    )


def test_paired_t_test(criterion):
    t, _ = paired_t_test([1, 2, 3, 4], [0, 0, 0, 0])
    t0, p0 = paired_t_test([1, 2, 3], [3, 2, 1])
    criterion(
        "Paired t-test t = 3.8730 +- 1e-4; t = 0 => p = 1 +- 1e-9",
        abs(t - 3.8730) <= 1e-4 and t0 == 0 and abs(p0 - 1.0) <= 1e-9,
        f"t={t:.6f}, p(t=0)={p0!r}",
    )


def test_split_fidelity(criterion):
    n = 62_886
    records = list(range(n))
    ratios = (0.72, 0.17961, 0.10036)
    parts = split_corpus(records, SplitRatios(*ratios, seed=0))
    sizes = tuple(len(p) for p in parts)
    sizes_ok = all(abs(a - b) <= 2 for a, b in zip(sizes, (45_280, 11_295, 6_311)))
    same = split_corpus(records, SplitRatios(*ratios, seed=0)) == parts
    memberships = {tuple(split_corpus(records, SplitRatios(*ratios, seed=s))[2]) for s in range(20)}
    criterion(
        "Split fidelity sizes within +-2 of (45280, 11295, 6311); same seed identical; 20 seeds distinct",
        sizes_ok and same and len(memberships) == 20,
        f"sizes={sizes}, same-seed identical={same}, distinct over 20 seeds={len(memberships)}",
    )


def _read_jsonl(path):
    return [json.loads(line) for line in open(path, encoding="utf-8")]


def test_derivation_contracts(criterion, fixture_corpus, fixtures_dir):
    records = list(load_corpus(fixture_corpus))
    simp = [p.to_json() for r in records for p in derive_simplification_pairs(r)]
    simp_ok = simp == _read_jsonl(fixtures_dir / "golden_simplification.jsonl")
    bg_ok = True
    for n in (1, 2, 3):
        derived = [d.to_json() for d in (derive_background_pairs(r, n) for r in records) if d]
        bg_ok &= derived == _read_jsonl(fixtures_dir / f"golden_background_{n}.jsonl")
    labels = [y for _, y in derive_plainness_training(records)]
    balanced = labels.count(0) == labels.count(1) > 0
    criterion(
        "Derivation contracts: simplification + background goldens (50 records); plainness balanced",
        len(records) == 50 and simp_ok and bg_ok and balanced,
        f"simplification={len(simp)} pairs ok={simp_ok}, background ok={bg_ok}, labels 0/1={labels.count(0)}/{labels.count(1)}",
    )


# every subcommand, as it is invoked from a working directory holding the inputs
CLI_RUNS = [
    ["align", "corpus.jsonl", "out/align.jsonl"],
    ["filter", "corpus.jsonl", "out/filter", "--len-low", "5"],
    ["derive", "corpus.jsonl", "out/simp", "--kind", "simplification"],
    ["derive", "corpus.jsonl", "out/bg", "--kind", "background", "--boundary", "1"],
    ["derive", "corpus.jsonl", "out/plain", "--kind", "plainness"],
    ["metrics", "pairs.jsonl", "out/metrics.json", "--familiarity-table", "freq.tsv", "--embeddings", "emb.jsonl"],
    ["stats", "corpus.jsonl", "out/stats.json", "--familiarity-table", "freq.tsv", "--csv", "out/stats.csv"],
    ["split", "corpus.jsonl", "out/split", "--seed", "11"],
    ["corrupt", "corpus.jsonl", "out/corrupt.jsonl", "--seed", "11"],
    ["augment", "corpus.jsonl", "out/aug-terms.jsonl", "--lexicon", "lexicon.tsv"],
    ["augment", "corpus.jsonl", "out/aug-kw.jsonl", "--lexicon", "lexicon.tsv", "--method", "keywords"],
    ["retrieve", "index.embf", "out/retrieve.json", "--query", "[0.5, -1, 2]", "--log-likelihoods", "[-1, -2, -3, -4, -5]"],
]


def _prepare_inputs(workdir, fixtures_dir, fixture_corpus):
    workdir.mkdir()
    shutil.copy(fixture_corpus, workdir / "corpus.jsonl")
    shutil.copy(fixtures_dir / "freq.tsv", workdir / "freq.tsv")
    shutil.copy(fixtures_dir / "lexicon.tsv", workdir / "lexicon.tsv")
    pairs, emb = [], []
    for r in list(load_corpus(fixture_corpus))[:10]:
        pairs.append({"id": r.id, "src": r.source, "tgt": r.target})
        vec_rng = np.random.default_rng(int(r.id.split("-")[-1]) if r.id.split("-")[-1].isdigit() else 0)
        emb.append({"id": r.id, "src": vec_rng.normal(size=(4, 3)).tolist(), "tgt": vec_rng.normal(size=(3, 3)).tolist()})
    (workdir / "pairs.jsonl").write_text("".join(json.dumps(p) + "\n" for p in pairs), encoding="utf-8")
    (workdir / "emb.jsonl").write_text("".join(json.dumps(e) + "\n" for e in emb), encoding="utf-8")
    idx_rng = np.random.default_rng(0)
    write_index(build_index((f"doc{i}", idx_rng.normal(size=3)) for i in range(40)), workdir / "index.embf")


def _snapshot(root):
    files = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            data = path.read_bytes()
            if path.name.endswith("manifest.json"):
                data = b"\n".join(l for l in data.split(b"\n") if b'"wall_time_seconds"' not in l)
            files[str(path.relative_to(root))] = data
    return files


def test_end_to_end_determinism(criterion, tmp_path, monkeypatch, fixtures_dir, fixture_corpus):
    snapshots, codes = [], []
    for name in ("run1", "run2"):
        workdir = tmp_path / name
        _prepare_inputs(workdir, fixtures_dir, fixture_corpus)
        monkeypatch.chdir(workdir)
        codes.append([cli.main(list(argv)) for argv in CLI_RUNS])
        snapshots.append(_snapshot(workdir))
    manifests = [k for k in snapshots[0] if k.endswith("manifest.json")]
    differing = [k for k in snapshots[0] if snapshots[0][k] != snapshots[1].get(k)]
    ok = codes[0] == codes[1] == [0] * len(CLI_RUNS) and not differing and len(manifests) == len(CLI_RUNS)
    criterion(
        "End-to-end determinism: every subcommand byte-identical across two runs (wall time excluded)",
        ok and snapshots[0].keys() == snapshots[1].keys(),
        f"{len(CLI_RUNS)} invocations, {len(snapshots[0])} files compared, differing={differing}, exit codes={codes[0]}",
    )


def test_ci_wall_time(criterion, session_elapsed):
    # collection puts this module last, so this is (nearly) the full suite's time
    elapsed = session_elapsed()
    criterion("Full test suite < 5 minutes on one core", elapsed < 300, f"{elapsed:.1f}s so far")
