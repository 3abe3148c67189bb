"""Command-line entry point: ``laycorpus <subcommand> ...``.

Every subcommand writes a JSON manifest next to its output recording the
exact arguments, resolved parameters and package version. ``laycorpus
replay MANIFEST`` re-runs it. Exit codes: 0 success, 1 usage error,
2 data or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import __version__
from .align import align_documents
from .corpus import (
    SplitRatios,
    corpus_statistics,
    corrupt_for_pretraining,
    derive_background_pairs,
    derive_plainness_training,
    derive_simplification_pairs,
    filter_outliers,
    load_corpus,
    split_corpus,
    write_corpus,
)
from .metrics import (
    bert_score,
    coleman_liau,
    load_frequency_table,
    rouge_l,
    word_familiarity,
)
from .retrieval import (
    HashEmbeddingProvider,
    augment_with_definitions,
    extract_keywords,
    load_lexicon,
    match_terms,
    rag_sequence_marginalize,
    read_index,
    read_query,
    retrieve_top_k,
)
from .rng import derive_seed
from .text import text_counts, word_tokens

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _unit_interval(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _open_out(path, newline="\n"):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline=newline)


def _write_jsonl(path, rows) -> int:
    n = 0
    with _open_out(path) as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
            n += 1
    return n


def _write_json(path, obj) -> None:
    with _open_out(path) as f:
        json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def _write_manifest(path, argv, subcommand, params, inputs, outputs, seed, started):
    _write_json(
        path,
        {
            "argv": list(argv),
            "subcommand": subcommand,
            "parameters": params,
            "inputs": [str(p) for p in inputs],
            "outputs": [str(p) for p in outputs],
            "seed": seed,
            "version": __version__,
            "wall_time_seconds": round(time.monotonic() - started, 6),
        },
    )


def _file_manifest(out) -> Path:
    return Path(str(out) + ".manifest.json")


# ---------------------------------------------------------------------------
# subcommands; each returns (params, inputs, outputs, manifest_path, seed)


def cmd_align(args):
    rows = []
    for r in load_corpus(args.corpus):
        result = align_documents(r.source, r.target, args.min_score)
        rows.append({"id": r.id, **result.to_dict()})
    _write_jsonl(args.out, rows)
    print(f"aligned {len(rows)} records", file=sys.stderr)
    params = {"min_score": args.min_score}
    return params, [args.corpus], [args.out], _file_manifest(args.out), None


def cmd_filter(args):
    kept, dropped = filter_outliers(
        load_corpus(args.corpus), args.sim_low, args.sim_high, args.len_low, args.len_high
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(kept, out / "kept.jsonl")
    _write_jsonl(
        out / "dropped.jsonl",
        ({"id": d.record.id, "reasons": list(d.reasons), "similarity": d.similarity} for d in dropped),
    )
    print(json.dumps({"kept": len(kept), "dropped": len(dropped)}))
    params = {
        "sim_low": args.sim_low, "sim_high": args.sim_high,
        "len_low": args.len_low, "len_high": args.len_high,
    }
    return params, [args.corpus], [out / "kept.jsonl", out / "dropped.jsonl"], out / "manifest.json", None


def cmd_derive(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = load_corpus(args.corpus)
    if args.kind == "simplification":
        path = out / "simplification.jsonl"
        rows = (
            p.to_json()
            for r in records
            for p in derive_simplification_pairs(r, args.min_score, args.min_len, args.max_len)
        )
        summary = {"kind": args.kind, "pairs": _write_jsonl(path, rows)}
    elif args.kind == "background":
        path = out / "background.jsonl"
        derived = (derive_background_pairs(r, args.boundary, args.min_score) for r in records)
        summary = {"kind": args.kind, "pairs": _write_jsonl(path, (d.to_json() for d in derived if d))}
    else:
        path = out / "plainness.tsv"
        rows = derive_plainness_training(records, args.min_len, args.max_len, args.min_score)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for sentence, label in rows:
                f.write(f"{label}\t{' '.join(sentence.split())}\n")
        summary = {
            "kind": args.kind,
            "label_0": sum(1 for _, y in rows if y == 0),
            "label_1": sum(1 for _, y in rows if y == 1),
        }
    print(json.dumps(summary, sort_keys=True))
    params = {
        "kind": args.kind, "boundary": args.boundary, "min_len": args.min_len,
        "max_len": args.max_len, "min_score": args.min_score,
    }
    return params, [args.corpus], [path], out / "manifest.json", None


def _read_pairs(path) -> List[dict]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: {e}") from None
            if not isinstance(obj, dict) or not isinstance(obj.get("src"), str) or not isinstance(obj.get("tgt"), str):
                raise ValueError(f"{path}:{lineno}: expected an object with string 'src' and 'tgt'")
            obj.setdefault("id", str(lineno))
            rows.append(obj)
    return rows


def _read_embeddings(path) -> dict:
    table = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            try:
                table[str(obj["id"])] = (obj["src"], obj["tgt"])
            except KeyError as e:
                raise ValueError(f"{path}:{lineno}: missing {e}") from None
    return table


def _mean(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def cmd_metrics(args):
    pairs = _read_pairs(args.pairs)
    table = load_frequency_table(args.familiarity_table) if args.familiarity_table else None
    embeddings = _read_embeddings(args.embeddings) if args.embeddings else None

    def cli(text):
        doc = text_counts(text)
        return coleman_liau(doc) if doc.word_count else None

    def fam(text):
        words = word_tokens(text)
        return word_familiarity(words, table) if words else None

    per_pair = []
    for p in pairs:
        rl = rouge_l(word_tokens(p["tgt"]), word_tokens(p["src"]))
        row = {
            "id": str(p["id"]),
            "rouge_l": {"precision": rl.precision, "recall": rl.recall, "f1": rl.f1},
            "coleman_liau_src": cli(p["src"]),
            "coleman_liau_tgt": cli(p["tgt"]),
        }
        if table is not None:
            row["familiarity_src"] = fam(p["src"])
            row["familiarity_tgt"] = fam(p["tgt"])
        if embeddings is not None:
            if row["id"] not in embeddings:
                raise ValueError(f"{args.embeddings}: no embeddings for pair {row['id']!r}")
            src_vecs, tgt_vecs = embeddings[row["id"]]
            bs = bert_score(tgt_vecs, src_vecs)
            row["bert_score"] = {"precision": bs.precision, "recall": bs.recall, "f1": bs.f1}
        per_pair.append(row)

    mean = {
        "rouge_l": {
            k: _mean(r["rouge_l"][k] for r in per_pair) for k in ("precision", "recall", "f1")
        },
        "coleman_liau_src": _mean(r["coleman_liau_src"] for r in per_pair),
        "coleman_liau_tgt": _mean(r["coleman_liau_tgt"] for r in per_pair),
    }
    if table is not None:
        mean["familiarity_src"] = _mean(r["familiarity_src"] for r in per_pair)
        mean["familiarity_tgt"] = _mean(r["familiarity_tgt"] for r in per_pair)
    if embeddings is not None:
        mean["bert_score"] = {
            k: _mean(r["bert_score"][k] for r in per_pair) for k in ("precision", "recall", "f1")
        }
    _write_json(args.out, {"count": len(per_pair), "mean": mean, "pairs": per_pair})
    inputs = [args.pairs] + [p for p in (args.familiarity_table, args.embeddings) if p]
    params = {"familiarity_table": args.familiarity_table, "embeddings": args.embeddings}
    return params, inputs, [args.out], _file_manifest(args.out), None


_CSV_FIELDS = [
    "journal", "count", "mean_src_len", "mean_tgt_len", "mean_src_cli", "mean_tgt_cli",
    "mean_src_familiarity", "mean_tgt_familiarity",
]


def cmd_stats(args):
    table = load_frequency_table(args.familiarity_table) if args.familiarity_table else None
    stats = corpus_statistics(load_corpus(args.corpus), table)
    report = stats.to_json()
    _write_json(args.out, report)
    outputs = [args.out]
    if args.csv:
        fields = _CSV_FIELDS if table is not None else _CSV_FIELDS[:6]
        with _open_out(args.csv, newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            for journal, row in report["journals"].items():
                writer.writerow({"journal": journal, **row})
        outputs.append(args.csv)
    inputs = [args.corpus] + ([args.familiarity_table] if args.familiarity_table else [])
    params = {"familiarity_table": args.familiarity_table, "csv": args.csv}
    return params, inputs, outputs, _file_manifest(args.out), None


def cmd_split(args):
    try:
        ratios = SplitRatios(args.train, args.valid, args.test, args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    parts = split_corpus(list(load_corpus(args.corpus)), ratios)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{name}.jsonl" for name in ("train", "valid", "test")]
    for path, part in zip(paths, parts):
        write_corpus(part, path)
    print(json.dumps({p.stem: len(part) for p, part in zip(paths, parts)}))
    params = {"train": args.train, "valid": args.valid, "test": args.test}
    return params, [args.corpus], paths, out / "manifest.json", args.seed


def cmd_corrupt(args):
    rows = []
    for r in load_corpus(args.corpus):
        corrupted, original = corrupt_for_pretraining(
            r.source, derive_seed(args.seed, r.id), args.rate
        )
        rows.append({"id": r.id, "src": corrupted, "tgt": original})
    _write_jsonl(args.out, rows)
    params = {"rate": args.rate, "record_seed": "derive_seed(seed, id)"}
    return params, [args.corpus], [args.out], _file_manifest(args.out), args.seed


def cmd_augment(args):
    lexicon = load_lexicon(args.lexicon)
    by_words = {tuple(word_tokens(e.entity)): e for e in lexicon}
    provider = HashEmbeddingProvider(args.embed_dim, args.seed) if args.method == "keywords" else None
    rows = []
    for r in load_corpus(args.corpus):
        if args.method == "terms":
            additions = match_terms(r.source, lexicon)
        else:
            additions = []
            for kw in extract_keywords(r.source, provider, args.keywords):
                entry = by_words.get(tuple(kw.split()))
                if entry is not None:
                    additions.append((entry.entity, entry.definition))
        aug = augment_with_definitions(r.source, additions, args.token_budget)
        obj = r.to_json()
        obj["src"] = aug.rendered
        obj["additions"] = [list(a) for a in aug.additions]
        rows.append(obj)
    _write_jsonl(args.out, rows)
    params = {
        "method": args.method, "keywords": args.keywords,
        "token_budget": args.token_budget, "embed_dim": args.embed_dim,
    }
    seed = args.seed if args.method == "keywords" else None
    return params, [args.corpus, args.lexicon], [args.out], _file_manifest(args.out), seed


def _json_vector(text: str, what: str):
    try:
        vec = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{what}: invalid JSON ({e})") from None
    if not isinstance(vec, list) or not all(isinstance(x, (int, float)) for x in vec):
        raise UsageError(f"{what}: expected a JSON array of numbers")
    return vec


def cmd_retrieve(args):
    if (args.query is None) == (args.query_file is None):
        raise UsageError("give exactly one of --query or --query-file")
    index = read_index(args.index, args.ids)
    query = read_query(args.query_file) if args.query_file else _json_vector(args.query, "--query")
    hits = retrieve_top_k(index, query, args.k)
    report = {
        "k": args.k,
        "hits": [{"doc_id": h.doc_id, "inner_product": h.inner_product, "prior": h.prior} for h in hits],
    }
    if args.log_likelihoods is not None:
        lls = _json_vector(args.log_likelihoods, "--log-likelihoods")
        report["log_marginal"] = rag_sequence_marginalize(hits, lls)
    _write_json(args.out, report)
    inputs = [args.index, args.ids or f"{args.index}.ids"] + ([args.query_file] if args.query_file else [])
    params = {"k": args.k, "query": args.query, "log_likelihoods": args.log_likelihoods}
    return params, inputs, [args.out], _file_manifest(args.out), None


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="laycorpus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("align", help="GPSS-align every record of a corpus")
    p.add_argument("corpus")
    p.add_argument("out")
    p.add_argument("--min-score", type=_unit_interval, default=0.0)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("filter", help="drop outlier pairs by similarity and length")
    p.add_argument("corpus")
    p.add_argument("out_dir")
    p.add_argument("--sim-low", type=_unit_interval, default=0.05)
    p.add_argument("--sim-high", type=_unit_interval, default=0.95)
    p.add_argument("--len-low", type=_positive_int, default=50)
    p.add_argument("--len-high", type=_positive_int, default=2000)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("derive", help="derive simplification/background/plainness data")
    p.add_argument("corpus")
    p.add_argument("out_dir")
    p.add_argument("--kind", required=True, choices=["simplification", "background", "plainness"])
    p.add_argument("--boundary", type=int, choices=[1, 2, 3], default=2)
    p.add_argument("--min-len", type=_positive_int, default=10)
    p.add_argument("--max-len", type=_positive_int, default=150)
    p.add_argument("--min-score", type=_unit_interval, default=0.0)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("metrics", help="score src/tgt pairs")
    p.add_argument("pairs")
    p.add_argument("out")
    p.add_argument("--familiarity-table")
    p.add_argument("--embeddings", help="JSONL of {id, src, tgt} token-vector lists")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("stats", help="per-journal corpus statistics")
    p.add_argument("corpus")
    p.add_argument("out")
    p.add_argument("--familiarity-table")
    p.add_argument("--csv", help="also write one CSV row per journal here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="seeded train/valid/test split")
    p.add_argument("corpus")
    p.add_argument("out_dir")
    p.add_argument("--train", type=float, default=0.72)
    p.add_argument("--valid", type=float, default=0.18)
    p.add_argument("--test", type=float, default=0.10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("corrupt", help="sentence-shuffle and mask sources for denoising pretraining")
    p.add_argument("corpus")
    p.add_argument("out")
    p.add_argument("--rate", type=_unit_interval, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("augment", help="append lexicon definitions to sources")
    p.add_argument("corpus")
    p.add_argument("out")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--method", choices=["terms", "keywords"], default="terms")
    p.add_argument("--keywords", type=_positive_int, default=3)
    p.add_argument("--token-budget", type=_positive_int, default=1024)
    p.add_argument("--embed-dim", type=_positive_int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("retrieve", help="exact top-k inner-product search")
    p.add_argument("index")
    p.add_argument("out")
    p.add_argument("--ids", help="id sidecar (default: INDEX.ids)")
    p.add_argument("--query", help="query vector as a JSON array")
    p.add_argument("--query-file", help="query vector as an EMBF file with one row")
    p.add_argument("-k", type=_positive_int, default=5)
    p.add_argument("--log-likelihoods", help="JSON array of generator log-likelihoods, one per hit")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        try:
            with open(args.manifest, encoding="utf-8") as f:
                recorded = json.load(f)["argv"]
        except (OSError, ValueError, KeyError) as e:
            print(f"laycorpus: error: {e}", file=sys.stderr)
            return EXIT_DATA
        return main(recorded)

    started = time.monotonic()
    try:
        params, inputs, outputs, manifest, seed = args.func(args)
    except UsageError as e:
        print(f"laycorpus {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as e:
        print(f"laycorpus {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA
    _write_manifest(manifest, argv, args.command, params, inputs, outputs, seed, started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
