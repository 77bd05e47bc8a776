"""Regenerate ``src/narrative_topology/data/lexicon.tsv.gz``.

The source table is ``lemminflect/resources/lemma_lu.csv.gz`` from the
lemminflect wheel (MIT licensed, derived from the SPECIALIST lexicon).
lemminflect is only needed to run this script, never at runtime::

    pip download --no-deps lemminflect==0.2.3
    python -m zipfile -e lemminflect-0.2.3-py3-none-any.whl lemm
    python scripts/build_lexicon.py lemm/lemminflect/resources/lemma_lu.csv.gz
"""
from __future__ import annotations

import argparse
import csv
import gzip
import io
from collections import defaultdict
from pathlib import Path

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "src" / "narrative_topology" / "data" / "lexicon.tsv.gz"
OVERRIDES = HERE / "lexicon_overrides.tsv"

UPOS = {"noun": "NOUN", "adj": "ADJ", "verb": "VERB", "aux": "VERB", "adv": "ADV"}
# majority-tag proxy: the source table carries no frequencies
TAG_PRIORITY = ("ADJ", "NOUN", "VERB", "ADV")
LEMMA_PRIORITY = ("NOUN", "ADJ", "VERB", "ADV")


def load(path: Path) -> dict[str, dict[str, str]]:
    table: dict[str, dict[str, str]] = defaultdict(dict)
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        for word, pos, lemmas in csv.reader(fh):
            w = word.lower()
            if not w.isalpha() or pos not in UPOS:
                continue
            lemma = lemmas.split("/")[0].lower()
            if not lemma.isalpha():
                continue
            table[w].setdefault(UPOS[pos], lemma)
    return table


def load_overrides(path: Path) -> dict[str, tuple[str, str]]:
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            word, tag, lemma = line.split("\t")
            out[word] = (tag, lemma)
    return out


def resolve(entries: dict[str, dict[str, str]], overrides: dict[str, tuple[str, str]]) -> dict[str, tuple[str, str]]:
    lex: dict[str, tuple[str, str]] = {}
    for w, by_tag in entries.items():
        tag = next(t for t in TAG_PRIORITY if t in by_tag)
        lemma = next(by_tag[t] for t in LEMMA_PRIORITY if t in by_tag)
        lex[w] = (tag, lemma)
    lex.update(overrides)
    # every lemma must be a fixed point so lookups are idempotent
    for w, (tag, lemma) in list(lex.items()):
        if lemma not in lex:
            lex[lemma] = (tag, lemma)
    for w in sorted(lex):
        seen = [w]
        cur = lex[w][1]
        while lex[cur][1] != cur and cur not in seen:
            seen.append(cur)
            cur = lex[cur][1]
        if cur in seen and lex[cur][1] != cur:
            cur = min(seen)
            lex[cur] = (lex[cur][0], cur)
        lex[w] = (lex[w][0], cur)
    return lex


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("source", type=Path)
    args = ap.parse_args()
    lex = resolve(load(args.source), load_overrides(OVERRIDES))
    buf = io.StringIO()
    for w in sorted(lex):
        tag, lemma = lex[w]
        buf.write(f"{w}\t{tag}\t{lemma}\n")
    with gzip.GzipFile(OUT, "wb", mtime=0) as fh:
        fh.write(buf.getvalue().encode("utf-8"))
    print(f"wrote {len(lex)} entries to {OUT}")


if __name__ == "__main__":
    main()
