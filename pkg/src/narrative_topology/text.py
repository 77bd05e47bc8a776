"""Tokenization, part-of-speech tagging, lemmatization and noun-phrase chunking.

Everything here is deterministic and dependency free.  The default tagger is a
lexicon lookup (``data/lexicon.tsv.gz``) with a suffix heuristic for unknown
words; any object with a ``tag(tokens) -> list[str]`` method can replace it.
"""
from __future__ import annotations

import gzip
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Protocol, Sequence

NOUN = "NOUN"
ADJ = "ADJ"
VERB = "VERB"
ADV = "ADV"
PUNCT = "PUNCT"

ADJ_SUFFIXES = ("ous", "ive", "al", "ful", "less", "ic")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_SIBILANT_ES = ("sses", "shes", "ches", "xes", "zes")
_KEEP_S = ("ss", "us", "is")


@dataclass(frozen=True)
class Phrase:
    """A noun chunk: ``(ADJ)* (NOUN)+`` as ``(lemma, tag)`` pairs."""

    tokens: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("a phrase needs at least one token")
        for lemma, tag in self.tokens:
            if not lemma or lemma != lemma.lower() or any(c.isspace() for c in lemma):
                raise ValueError(f"bad lemma {lemma!r}")
            if tag not in (NOUN, ADJ):
                raise ValueError(f"bad tag {tag!r}")

    @property
    def lemmas(self) -> tuple[str, ...]:
        return tuple(lemma for lemma, _ in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


class Lexicon:
    """Word -> (majority tag, lemma) table."""

    def __init__(self, entries: dict[str, tuple[str, str]]):
        self._entries = entries

    @classmethod
    def from_tsv_lines(cls, lines: Iterable[str]) -> "Lexicon":
        entries = {}
        for line in lines:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            word, tag, lemma = line.split("\t")
            entries[word] = (tag, lemma)
        return cls(entries)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def tag(self, word: str) -> str | None:
        entry = self._entries.get(word)
        return entry[0] if entry else None

    def lemma(self, word: str) -> str | None:
        entry = self._entries.get(word)
        return entry[1] if entry else None


@lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    data = resources.files("narrative_topology") / "data" / "lexicon.tsv.gz"
    with data.open("rb") as raw, gzip.open(raw, "rt", encoding="utf-8") as fh:
        return Lexicon.from_tsv_lines(fh)


@lru_cache(maxsize=None)
def stop_words() -> frozenset[str]:
    data = resources.files("narrative_topology") / "data" / "stopwords.txt"
    return frozenset(w.strip() for w in data.read_text("utf-8").splitlines() if w.strip())


def _strip_suffix(word: str) -> str:
    if len(word) <= 3:
        return word
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith(_SIBILANT_ES):
        return word[:-2]
    if word.endswith(_KEEP_S):
        return word
    if word.endswith("s"):
        return word[:-1]
    return word


def lemmatize(token: str, lexicon: Lexicon | None = None) -> str:
    """Lowercase lemma of ``token``.

    Lexicon lookup first, then plural suffix rules (``-ies -> y``, ``-es``
    after sibilants, ``-s``), repeated until nothing changes so the result is
    always a fixed point.
    """
    if not token:
        raise ValueError("cannot lemmatize an empty token")
    lex = default_lexicon() if lexicon is None else lexicon
    word = token.lower()
    while True:
        nxt = lex.lemma(word)
        if nxt is None:
            nxt = _strip_suffix(word)
        if nxt == word:
            return word
        word = nxt


def tokenize(text: str) -> list[str]:
    """Unicode word tokens and single punctuation marks, in order."""
    return _TOKEN_RE.findall(text)


class Tagger(Protocol):
    def tag(self, tokens: Sequence[str]) -> list[str]: ...


class LexiconTagger:
    """Majority-tag lookup; unknown words are NOUN unless they carry an ADJ suffix."""

    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = default_lexicon() if lexicon is None else lexicon

    def tag_word(self, word: str) -> str:
        if not any(c.isalnum() for c in word):
            return PUNCT
        w = word.lower()
        tag = self.lexicon.tag(w)
        if tag is not None:
            return tag
        if w.endswith(ADJ_SUFFIXES):
            return ADJ
        return NOUN

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return [self.tag_word(t) for t in tokens]


@lru_cache(maxsize=None)
def default_tagger() -> LexiconTagger:
    return LexiconTagger()


def _chunk(run: list[tuple[str, str]]) -> list[Phrase]:
    # maximal (ADJ)* (NOUN)+ matches inside a run of NOUN/ADJ tokens
    phrases = []
    start = 0
    i = 0
    n = len(run)
    while i < n:
        if run[i][1] == NOUN and (i + 1 == n or run[i + 1][1] == ADJ):
            phrases.append(Phrase(tuple(run[start : i + 1])))
            start = i + 1
        i += 1
    return phrases


def extract_phrases(text: str, tagger: Tagger | None = None, lexicon: Lexicon | None = None) -> list[Phrase]:
    """Noun phrases of ``text`` in reading order.

    Stop-words, tokens shorter than two characters, digits-only tokens,
    punctuation and any token that is not NOUN/ADJ break chunks.
    """
    tokens = tokenize(text.lower())
    if not tokens:
        return []
    tagger = default_tagger() if tagger is None else tagger
    tags = tagger.tag(tokens)
    stops = stop_words()
    phrases: list[Phrase] = []
    run: list[tuple[str, str]] = []
    for tok, tag in zip(tokens, tags):
        keep = (
            tag in (NOUN, ADJ)
            and len(tok) >= 2
            and tok not in stops
            and not tok.isdigit()
            and any(c.isalpha() for c in tok)
        )
        if keep:
            run.append((lemmatize(tok, lexicon), tag))
        elif run:
            phrases.extend(_chunk(run))
            run = []
    if run:
        phrases.extend(_chunk(run))
    return phrases
