"""Dated documents: JSONL ingestion and per-day phrase buckets."""
from __future__ import annotations

import datetime as dt
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .text import Lexicon, Phrase, Tagger, extract_phrases

log = logging.getLogger(__name__)

REQUIRED_KEYS = ("date", "source", "title", "body")


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class Document:
    date: dt.date
    source: str
    title: str
    body: str

    def __post_init__(self):
        if not isinstance(self.date, dt.date):
            object.__setattr__(self, "date", dt.date.fromisoformat(str(self.date)))
        body = _normalize_ws(self.body)
        if not body:
            raise ValueError("document body is empty")
        object.__setattr__(self, "body", body)

    @classmethod
    def from_record(cls, record: Mapping) -> "Document":
        missing = [k for k in REQUIRED_KEYS if k not in record]
        if missing:
            raise ValueError(f"missing keys: {', '.join(missing)}")
        for k in REQUIRED_KEYS:
            if not isinstance(record[k], str):
                raise ValueError(f"{k!r} must be a string")
        return cls(
            date=dt.date.fromisoformat(record["date"]),
            source=record["source"],
            title=record["title"],
            body=record["body"],
        )

    def to_record(self) -> dict:
        return {"date": self.date.isoformat(), "source": self.source, "title": self.title, "body": self.body}


def load_corpus(path: str | Path) -> tuple[list[Document], int]:
    """Read a JSONL corpus; returns ``(documents, n_skipped)``.

    Invalid lines are logged with their line number and skipped.  An
    unreadable file raises ``OSError``.
    """
    docs = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record is not a JSON object")
                docs.append(Document.from_record(record))
            except ValueError as exc:  # JSONDecodeError is a ValueError
                skipped += 1
                log.warning("%s:%d: skipping record (%s)", path, lineno, exc)
    return docs, skipped


def parse_corpus(path: str | Path) -> list[Document]:
    return load_corpus(path)[0]


def write_corpus(docs: Iterable[Document], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False, sort_keys=True) + "\n")
    return path


def bucket_by_date(
    docs: Sequence[Document], tagger: Tagger | None = None, lexicon: Lexicon | None = None
) -> dict[dt.date, list[Phrase]]:
    """Phrases per publication date, keys in ascending date order.

    Each value concatenates ``extract_phrases`` over that day's documents in
    input order; a day whose documents yield nothing still gets a key.
    """
    buckets: dict[dt.date, list[Phrase]] = {}
    for doc in docs:
        buckets.setdefault(doc.date, []).extend(extract_phrases(doc.body, tagger, lexicon))
    return {day: buckets[day] for day in sorted(buckets)}


def write_buckets(buckets: Mapping[dt.date, Sequence[Phrase]], path: str | Path) -> Path:
    """One JSON line per day: ``{"date": ..., "phrases": [[[lemma, tag], ...], ...]}``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for day, phrases in buckets.items():
            rec = {"date": day.isoformat(), "phrases": [[list(t) for t in p.tokens] for p in phrases]}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return path


def read_buckets(path: str | Path) -> dict[dt.date, list[Phrase]]:
    buckets = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            buckets[dt.date.fromisoformat(rec["date"])] = [
                Phrase(tuple((lemma, tag) for lemma, tag in p)) for p in rec["phrases"]
            ]
    return buckets
