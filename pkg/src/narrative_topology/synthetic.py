"""Two-regime synthetic corpora with a planted change day.

Words are pronounceable pseudo-words that the default tagger reads as
nouns and the lemmatizer leaves alone, so each generated sentence becomes
exactly one noun phrase.  A regime is a set of topics; a sentence strings
together a few words from one topic.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .corpus import Document
from .text import ADJ_SUFFIXES, default_lexicon, stop_words

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "dr", "gr", "kl", "pl", "tr")
_VOWELS = ("a", "e", "i", "o", "u")
_CODAS = ("", "", "n", "r", "k", "m", "t")


@dataclass(frozen=True)
class VocabSpec:
    n_topics: int = 4
    topic_size: int = 8
    sentences_per_doc: int = 30
    phrase_len: tuple[int, int] = (2, 4)

    def __post_init__(self):
        if self.n_topics < 1 or self.topic_size < 2:
            raise ValueError("need at least one topic of two words")
        lo, hi = self.phrase_len
        if not 2 <= lo <= hi <= self.topic_size:
            raise ValueError("phrase_len must satisfy 2 <= lo <= hi <= topic_size")

    @property
    def size(self) -> int:
        return self.n_topics * self.topic_size


def pseudo_words(n: int, rng: np.random.Generator) -> list[str]:
    """``n`` distinct nonsense nouns, unknown to the lexicon."""
    lex = default_lexicon()
    stops = stop_words()
    seen: set[str] = set()
    out = []
    while len(out) < n:
        word = "".join(
            rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS) for _ in range(rng.integers(2, 4))
        )
        if (
            word in seen
            or word in lex
            or word in stops
            or word.endswith("s")
            or word.endswith(ADJ_SUFFIXES)
        ):
            continue
        seen.add(word)
        out.append(word)
    return out


def _topics(words: list[str], spec: VocabSpec) -> list[list[str]]:
    return [words[i * spec.topic_size : (i + 1) * spec.topic_size] for i in range(spec.n_topics)]


def _sentence(rng: np.random.Generator, topics: list[list[str]], spec: VocabSpec) -> str:
    topic = topics[rng.integers(len(topics))]
    k = int(rng.integers(spec.phrase_len[0], spec.phrase_len[1] + 1))
    picked = rng.choice(len(topic), size=k, replace=False)
    return " ".join(topic[i] for i in sorted(picked)) + "."


def make_synthetic_corpus(
    T: int = 60,
    change_day: int = 30,
    vocab_a: VocabSpec = VocabSpec(),
    vocab_b: VocabSpec = VocabSpec(n_topics=10),
    overlap: float = 0.2,
    seed: int = 0,
    docs_per_day: int = 4,
    start: dt.date = dt.date(2024, 1, 1),
) -> list[Document]:
    """``T`` days of documents; days ``>= change_day`` (0-based) switch from pool A to pool B.

    A fraction ``overlap`` of pool B's words is borrowed from pool A, so
    ``overlap=1`` with equal specs gives identical pools.
    """
    if not 0 < change_day < T:
        raise ValueError("need 0 < change_day < T")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_shared = min(round(overlap * vocab_b.size), vocab_a.size)
    words = pseudo_words(vocab_a.size + vocab_b.size - n_shared, rng)
    pool_a = words[: vocab_a.size]
    shared = pool_a[:n_shared] if overlap < 1.0 else list(pool_a)
    pool_b = shared + words[vocab_a.size : vocab_a.size + vocab_b.size - len(shared)]
    if overlap < 1.0:
        pool_b = [pool_b[i] for i in rng.permutation(len(pool_b))]
    topics_a = _topics(pool_a, vocab_a)
    topics_b = _topics(pool_b, vocab_b)

    docs = []
    for day in range(T):
        topics, spec = (topics_a, vocab_a) if day < change_day else (topics_b, vocab_b)
        date = start + dt.timedelta(days=day)
        for j in range(docs_per_day):
            body = " ".join(_sentence(rng, topics, spec) for _ in range(spec.sentences_per_doc))
            docs.append(Document(date, f"synthetic-{j % 2}", f"day {day} doc {j}", body))
    return docs
