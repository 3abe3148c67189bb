"""
The command line, end to end
============================

Builds a small corpus in a temporary directory and runs each subcommand
through ``laycorpus.cli.main``, the same entry point as the ``laycorpus``
script. Every run leaves a manifest that ``laycorpus replay`` can re-run.
"""
import json
import tempfile
from pathlib import Path

from laycorpus.cli import main

records = [
    {
        "id": f"rec{i}",
        "journal": journal,
        "src": f"Study {i} measured antibody levels in {20 + i} patients. "
               "Responses declined after six months. Boosters restored them.",
        "tgt": f"We checked the immune response of {20 + i} people. "
               "Protection faded after six months. A booster shot brought it back.",
    }
    for i, journal in enumerate(["PNAS", "eLife", "PNAS", "PLOS Genetics", "eLife", "PNAS"])
]

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    corpus = tmp / "corpus.jsonl"
    corpus.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    (tmp / "lexicon.tsv").write_text("antibody\tA protein that marks germs for removal.\n", encoding="utf-8")

    def run(*argv):
        argv = [str(a) for a in argv]
        code = main(argv)
        print(f"$ laycorpus {' '.join(a.replace(str(tmp) + '/', '') for a in argv)}  -> exit {code}")
        return code

    run("align", corpus, tmp / "align.jsonl")
    print(json.loads((tmp / "align.jsonl").read_text().splitlines()[0])["pairs"])

    run("derive", corpus, tmp / "derived", "--kind", "simplification", "--min-len", "3")
    run("stats", corpus, tmp / "stats.json")
    print(json.dumps(json.loads((tmp / "stats.json").read_text())["overall"], indent=1))

    run("split", corpus, tmp / "split", "--train", "0.5", "--valid", "0.25", "--test", "0.25", "--seed", "1")
    run("augment", corpus, tmp / "augmented.jsonl", "--lexicon", tmp / "lexicon.tsv")
    print(json.loads((tmp / "augmented.jsonl").read_text().splitlines()[0])["src"])

    # usage errors exit 1, data errors exit 2
    run("align", tmp / "missing.jsonl", tmp / "x.jsonl")

    manifest = tmp / "split" / "manifest.json"
    print(manifest.read_text())
    first = (tmp / "split" / "test.jsonl").read_bytes()
    run("replay", manifest)
    print("replay reproduced test.jsonl:", first == (tmp / "split" / "test.jsonl").read_bytes())
