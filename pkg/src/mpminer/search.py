"""Literature search agent: query expansion, relevance scoring, ranking.

The bibliographic backend is abstracted behind ``BibliographicClient``; a
PubMed E-utilities adapter and a JSON fixture adapter are provided.
"""

from __future__ import annotations

import json
import os
import re
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import httpx

from .documents import PaperDocument
from .net import RateLimited, RetryPolicy, TokenBucket, TransportError, with_retries

DEFAULT_KEYWORDS = (
    "growth",
    "cultivation",
    "medium",
    "temperature",
    "ph",
    "oxygen",
    "fermentation",
)

PHRASE_TEMPLATES = ("growth conditions", "medium composition", "temperature pH oxygen")

DEFAULT_THRESHOLD = 3


class MalformedResponse(RuntimeError):
    """The backend returned something we could not interpret."""


class NotFound(RuntimeError):
    """The requested article does not exist."""


class SearchFailed(RuntimeError):
    """Every expanded query failed at the transport level."""


@dataclass(frozen=True)
class KeywordSet:
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("keyword set must be non-empty")
        lowered = tuple(k.lower() for k in self.keywords)
        if len(set(lowered)) != len(lowered):
            raise ValueError("keywords must be unique")
        object.__setattr__(self, "keywords", lowered)


@dataclass(frozen=True)
class ExpandedQuery:
    text: str
    source_keywords: tuple[str, ...] = ()


@dataclass(frozen=True)
class ArticleMeta:
    article_id: str
    title: str
    abstract: Optional[str] = None
    full_text_available: bool = False


@dataclass(frozen=True)
class RelevanceScore:
    value: int
    strain_hits: int
    keyword_hits: int


@dataclass(frozen=True)
class ScoredArticle:
    meta: ArticleMeta
    score: RelevanceScore


@dataclass
class QueryLogEntry:
    query: str
    result_count: int = 0
    error: Optional[str] = None
    relevant_ids: list[str] = field(default_factory=list)


@dataclass
class SearchHistory:
    entries: list[QueryLogEntry] = field(default_factory=list)
    fetch_outcomes: dict[str, bool] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "entries": [
                {
                    "query": e.query,
                    "result_count": e.result_count,
                    "error": e.error,
                    "relevant_ids": e.relevant_ids,
                }
                for e in self.entries
            ],
            "fetch_outcomes": self.fetch_outcomes,
        }


@dataclass
class RankedArticles:
    articles: list[ScoredArticle]
    history: SearchHistory


@dataclass(frozen=True)
class SearchConfig:
    keywords: KeywordSet = KeywordSet()
    templates: tuple[str, ...] = PHRASE_TEMPLATES
    threshold: int = DEFAULT_THRESHOLD
    max_papers: int = 10
    per_query_limit: int = 20

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.max_papers < 1:
            raise ValueError("max_papers must be >= 1")


class BibliographicClient(Protocol):
    def search(self, query: str, limit: int) -> list[ArticleMeta]: ...

    def fetch_fulltext(self, article_id: str) -> Optional[str]:
        """Return the open-access full text, or None when unavailable."""
        ...

    def get_article(self, article_id: str) -> ArticleMeta: ...


def expand_queries(query, keywords: KeywordSet, templates: tuple[str, ...] = PHRASE_TEMPLATES) -> list[ExpandedQuery]:
    """Build the deterministic expanded-query list: bare name, singles, templates."""
    base = query.display_form
    out: list[ExpandedQuery] = [ExpandedQuery(base)]
    seen = {base}
    for kw in keywords.keywords:
        text = f"{base} {kw}"
        if text not in seen:
            seen.add(text)
            out.append(ExpandedQuery(text, (kw,)))
    for template in templates:
        text = f"{base} {template}"
        if text not in seen:
            seen.add(text)
            sources = tuple(
                kw for kw in keywords.keywords if _occurrences(template, kw) > 0
            )
            out.append(ExpandedQuery(text, sources))
    return out


def _occurrences(text: str, phrase: str) -> int:
    """Whole-word, case-insensitive occurrence count of phrase in text."""
    if not text or not phrase:
        return 0
    pattern = r"(?<!\w)" + re.escape(phrase) + r"(?!\w)"
    return len(re.findall(pattern, text, flags=re.IGNORECASE))


def score_relevance(article: ArticleMeta, query, keywords: KeywordSet) -> RelevanceScore:
    """Weighted occurrence score: title hits count double, abstract hits single.

    Strain matching prefers the full display form; when it never occurs in a
    location the bare "genus species" form is counted there instead.
    """
    title = article.title or ""
    abstract = article.abstract or ""

    def strain_occ(text: str) -> int:
        specific = _occurrences(text, query.display_form)
        if specific:
            return specific
        return _occurrences(text, query.genus_species)

    strain_title = strain_occ(title)
    strain_abstract = strain_occ(abstract)
    kw_title = sum(_occurrences(title, kw) for kw in keywords.keywords)
    kw_abstract = sum(_occurrences(abstract, kw) for kw in keywords.keywords)

    value = 2 * strain_title + strain_abstract + 2 * kw_title + kw_abstract
    return RelevanceScore(
        value=value,
        strain_hits=strain_title + strain_abstract,
        keyword_hits=kw_title + kw_abstract,
    )


def search_articles(eq: ExpandedQuery, limit: int, client: BibliographicClient) -> list[ArticleMeta]:
    if limit < 1:
        raise ValueError("limit must be >= 1")
    return client.search(eq.text, limit)[:limit]


@dataclass(frozen=True)
class AbstractOnly:
    article_id: str
    abstract: str


class ArticleCache:
    """On-disk cache of fetched article text, keyed by article id."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, article_id: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9._-]", "_", article_id)
        return self.root / f"{safe}.json"

    def get(self, article_id: str) -> Optional[dict]:
        path = self._path(article_id)
        with self._lock:
            if not path.exists():
                return None
            try:
                return json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                return None

    def put(self, article_id: str, payload: dict) -> None:
        path = self._path(article_id)
        with self._lock:
            path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


def fetch_fulltext(
    article: ArticleMeta,
    client: BibliographicClient,
    cache: Optional[ArticleCache] = None,
):
    """Retrieve full text when available, otherwise fall back to the abstract."""
    if cache is not None:
        hit = cache.get(article.article_id)
        if hit is not None:
            if hit["kind"] == "full":
                return PaperDocument.from_raw(article.article_id, hit["text"])
            return AbstractOnly(article.article_id, hit["text"])

    body = client.fetch_fulltext(article.article_id)
    if body:
        if cache is not None:
            cache.put(article.article_id, {"kind": "full", "text": body})
        return PaperDocument.from_raw(article.article_id, body)

    abstract = article.abstract or ""
    if cache is not None:
        cache.put(article.article_id, {"kind": "abstract", "text": abstract})
    return AbstractOnly(article.article_id, abstract)


def run_search(query, cfg: SearchConfig, client: BibliographicClient) -> RankedArticles:
    """Expand, search, score, filter by threshold, and rank articles.

    Individual query failures are logged and skipped; the run fails only when
    every expanded query fails.
    """
    history = SearchHistory()
    by_id: dict[str, ScoredArticle] = {}
    failures = 0

    expanded = expand_queries(query, cfg.keywords, cfg.templates)
    for eq in expanded:
        entry = QueryLogEntry(query=eq.text)
        history.entries.append(entry)
        try:
            results = search_articles(eq, cfg.per_query_limit, client)
        except (TransportError, MalformedResponse) as exc:
            entry.error = str(exc) or type(exc).__name__
            failures += 1
            continue
        entry.result_count = len(results)
        for meta in results:
            score = score_relevance(meta, query, cfg.keywords)
            current = by_id.get(meta.article_id)
            if current is None or score.value > current.score.value:
                by_id[meta.article_id] = ScoredArticle(meta, score)

    if failures == len(expanded):
        raise SearchFailed("all expanded queries failed")

    kept = [sa for sa in by_id.values() if sa.score.value >= cfg.threshold]
    kept.sort(key=lambda sa: (-sa.score.value, sa.meta.article_id))
    kept = kept[: cfg.max_papers]
    for entry in history.entries:
        entry.relevant_ids = [
            sa.meta.article_id for sa in kept if _query_matches(entry.query, sa)
        ]
    return RankedArticles(kept, history)


def _query_matches(query_text: str, scored: ScoredArticle) -> bool:
    # A ranked article is attributed to a query when its title mentions any
    # query term beyond the strain name; coarse, for history display only.
    return scored.score.value > 0 and query_text.split()[0].lower() in (
        (scored.meta.title or "").lower() + " " + (scored.meta.abstract or "").lower()
    )


class FixtureBibliographicClient:
    """Replays canned search results from a JSON fixture.

    Fixture shape::

        {
          "searches": {"<query text>": ["id1", "id2", ...]},
          "articles": {"id1": {"title": ..., "abstract": ..., "full_text": ...}},
          "default_ids": ["id1", ...]
        }
    """

    def __init__(self, fixture: dict):
        self.fixture = fixture
        self.search_calls = 0
        self.fulltext_calls = 0

    @classmethod
    def from_file(cls, path: Path) -> "FixtureBibliographicClient":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def _meta(self, article_id: str) -> ArticleMeta:
        try:
            raw = self.fixture["articles"][article_id]
        except KeyError:
            raise NotFound(article_id) from None
        return ArticleMeta(
            article_id=article_id,
            title=raw.get("title", ""),
            abstract=raw.get("abstract"),
            full_text_available=bool(raw.get("full_text")),
        )

    def search(self, query: str, limit: int) -> list[ArticleMeta]:
        self.search_calls += 1
        status = self.fixture.get("statuses", {}).get(query)
        if status == 429:
            raise RateLimited(query)
        if status is not None and status >= 400:
            raise TransportError(f"HTTP {status}")
        ids = self.fixture.get("searches", {}).get(query)
        if ids is None:
            ids = self.fixture.get("default_ids", [])
        return [self._meta(i) for i in ids[:limit]]

    def fetch_fulltext(self, article_id: str) -> Optional[str]:
        self.fulltext_calls += 1
        if article_id not in self.fixture["articles"]:
            raise NotFound(article_id)
        return self.fixture["articles"][article_id].get("full_text")

    def get_article(self, article_id: str) -> ArticleMeta:
        return self._meta(article_id)


class PubMedClient:
    """NCBI E-utilities adapter (esearch + efetch, PMC open-access full text)."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 30.0,
        retry: RetryPolicy = RetryPolicy(),
    ):
        self.base_url = (
            base_url
            or os.environ.get("PUBMED_BASE_URL")
            or "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"
        ).rstrip("/")
        self.api_key = api_key or os.environ.get("PUBMED_API_KEY")
        self.retry = retry
        # Public E-utilities policy: 3 req/s anonymous, 10 req/s with a key.
        self._bucket = TokenBucket(10.0 if self.api_key else 3.0, burst=1)
        self._http = httpx.Client(timeout=timeout)

    def _get(self, endpoint: str, params: dict) -> httpx.Response:
        if self.api_key:
            params = {**params, "api_key": self.api_key}

        def attempt() -> httpx.Response:
            self._bucket.acquire()
            try:
                resp = self._http.get(f"{self.base_url}/{endpoint}", params=params)
            except httpx.HTTPError as exc:
                raise TransportError(str(exc)) from exc
            if resp.status_code == 429:
                raise RateLimited("HTTP 429")
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}")
            return resp

        return with_retries(attempt, self.retry)

    def search(self, query: str, limit: int) -> list[ArticleMeta]:
        resp = self._get(
            "esearch.fcgi",
            {"db": "pubmed", "term": query, "retmax": limit, "retmode": "json"},
        )
        try:
            ids = resp.json()["esearchresult"]["idlist"]
        except (KeyError, ValueError) as exc:
            raise MalformedResponse(str(exc)) from exc
        if not ids:
            return []
        return self._fetch_summaries(ids)

    def _fetch_summaries(self, ids: list[str]) -> list[ArticleMeta]:
        resp = self._get(
            "efetch.fcgi",
            {"db": "pubmed", "id": ",".join(ids), "retmode": "xml"},
        )
        try:
            root = ET.fromstring(resp.text)
        except ET.ParseError as exc:
            raise MalformedResponse(str(exc)) from exc
        out = []
        for node in root.iter("PubmedArticle"):
            pmid = node.findtext(".//PMID") or ""
            title_el = node.find(".//ArticleTitle")
            title = "".join(title_el.itertext()) if title_el is not None else ""
            abstract_parts = [
                "".join(a.itertext()) for a in node.findall(".//AbstractText")
            ]
            has_pmc = any(
                (el.get("IdType") == "pmc") for el in node.findall(".//ArticleId")
            )
            out.append(
                ArticleMeta(
                    article_id=pmid,
                    title=title,
                    abstract="\n".join(abstract_parts) or None,
                    full_text_available=has_pmc,
                )
            )
        return out

    def get_article(self, article_id: str) -> ArticleMeta:
        metas = self._fetch_summaries([article_id])
        if not metas:
            raise NotFound(article_id)
        return metas[0]

    def fetch_fulltext(self, article_id: str) -> Optional[str]:
        resp = self._get(
            "elink.fcgi",
            {
                "dbfrom": "pubmed",
                "db": "pmc",
                "id": article_id,
                "retmode": "json",
            },
        )
        try:
            linksets = resp.json().get("linksets", [])
            pmc_ids = [
                link
                for ls in linksets
                for db in ls.get("linksetdbs", [])
                if db.get("dbto") == "pmc"
                for link in db.get("links", [])
            ]
        except ValueError as exc:
            raise MalformedResponse(str(exc)) from exc
        if not pmc_ids:
            return None
        resp = self._get(
            "efetch.fcgi", {"db": "pmc", "id": pmc_ids[0], "retmode": "xml"}
        )
        try:
            root = ET.fromstring(resp.text)
        except ET.ParseError as exc:
            raise MalformedResponse(str(exc)) from exc
        body = root.find(".//body")
        if body is None:
            return None
        return "\n".join(t.strip() for t in body.itertext() if t.strip())
