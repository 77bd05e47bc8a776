"""Client for NewsAPI-compatible ``everything`` endpoints with an on-disk cache.

Each (query, day, source) request is cached as raw response bytes under
``<cache_dir>/<query-hash>/<YYYY-MM-DD>/<source>.json`` so reruns never touch
the network.
"""
from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import os
import time
from pathlib import Path
from typing import Callable, Sequence

from .corpus import Document

log = logging.getLogger(__name__)

DEFAULT_URL = "https://newsapi.org/v2/everything"
API_KEY_ENV = "NEWS_API_KEY"


class FetchError(RuntimeError):
    pass


def query_hash(query: str) -> str:
    return hashlib.sha256(query.encode("utf-8")).hexdigest()[:16]


def cache_path(cache_dir: str | Path, query: str, day: dt.date, source: str) -> Path:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in source)
    return Path(cache_dir) / query_hash(query) / day.isoformat() / f"{safe}.json"


def _days(start: dt.date, end: dt.date):
    day = start
    while day <= end:
        yield day
        day += dt.timedelta(days=1)


def _request(session, url: str, params: dict, max_retries: int, backoff: float, sleep: Callable[[float], None]) -> bytes | None:
    for attempt in range(max_retries + 1):
        try:
            resp = session.get(url, params=params, timeout=30)
        except Exception as exc:  # connection errors of any client library
            log.warning("request failed (%s), attempt %d", exc, attempt + 1)
            sleep(backoff * 2**attempt)
            continue
        if resp.status_code == 200:
            return resp.content
        if resp.status_code == 429 or resp.status_code >= 500:
            log.warning("HTTP %d, backing off (attempt %d)", resp.status_code, attempt + 1)
            sleep(backoff * 2**attempt)
            continue
        log.warning("HTTP %d for %s", resp.status_code, params.get("sources"))
        return None
    return None


def _is_ok(raw: bytes) -> bool:
    try:
        payload = json.loads(raw.decode("utf-8"))
    except ValueError:
        return False
    return isinstance(payload, dict) and payload.get("status", "ok") == "ok"


def _documents(raw: bytes, source: str, start: dt.date, end: dt.date) -> list[Document]:
    payload = json.loads(raw.decode("utf-8"))
    docs = []
    for art in payload.get("articles") or []:
        published = (art.get("publishedAt") or "")[:10]
        try:
            day = dt.date.fromisoformat(published)
        except ValueError:
            continue
        if not start <= day <= end:
            continue
        title = art.get("title") or ""
        body = art.get("content") or art.get("description") or title
        try:
            docs.append(Document(day, source, title, body))
        except ValueError:
            continue
    return docs


def fetch_articles(
    query: str,
    from_date: dt.date,
    to_date: dt.date,
    sources: Sequence[str],
    api_key: str | None,
    cache_dir: str | Path,
    *,
    session=None,
    url: str = DEFAULT_URL,
    page_size: int = 100,
    max_retries: int = 4,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> list[Document]:
    """Fetch one page per (day, source), deduplicated on ``(source, title)``.

    ``api_key`` falls back to ``$NEWS_API_KEY``.  Days that still fail after
    ``max_retries`` are logged and skipped.  Cached responses are used
    verbatim, so a warm cache needs neither a key nor a session.
    """
    if from_date > to_date:
        raise ValueError(f"from date {from_date} is after to date {to_date}")
    api_key = api_key or os.environ.get(API_KEY_ENV, "")
    docs: list[Document] = []
    seen: set[tuple[str, str]] = set()
    for day in _days(from_date, to_date):
        for source in sources:
            path = cache_path(cache_dir, query, day, source)
            if path.exists():
                raw = path.read_bytes()
            else:
                if not api_key:
                    raise ValueError(f"no API key (set {API_KEY_ENV} or pass one) and no cache for {day} {source}")
                if session is None:
                    import requests

                    session = requests.Session()
                params = {
                    "q": query,
                    "from": day.isoformat(),
                    "to": day.isoformat(),
                    "sources": source,
                    "pageSize": page_size,
                    "apiKey": api_key,
                }
                raw = _request(session, url, params, max_retries, backoff, sleep)
                if raw is None or not _is_ok(raw):
                    log.warning("skipping %s %s after failed requests", day, source)
                    continue
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_bytes(raw)
            for doc in _documents(raw, source, from_date, to_date):
                key = (doc.source, doc.title)
                if key in seen:
                    continue
                seen.add(key)
                docs.append(doc)
    return docs
