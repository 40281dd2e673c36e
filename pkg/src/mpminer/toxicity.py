"""Metabolome toxicity screening: CAS validation and Ames-dataset cross-matching."""

from __future__ import annotations

import csv
import io
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import httpx

from .net import RetryPolicy, TokenBucket, TransportError, with_retries

_CAS_PATTERN = re.compile(r"^(\d{2,7})-(\d{2})-(\d)$")


class FormatError(ValueError):
    pass


class ChecksumError(ValueError):
    pass


class SchemaError(ValueError):
    pass


class DuplicateConflict(ValueError):
    pass


class AuthError(RuntimeError):
    pass


class UnknownOrganism(RuntimeError):
    pass


def normalize_cas(raw: str) -> str:
    """Validate a CAS registry number: format d{2,7}-d{2}-d plus check digit.

    The check digit is the mod-10 weighted sum of the preceding digits, taken
    right-to-left with weights 1..n.
    """
    cas = re.sub(r"\s+", "", raw)
    match = _CAS_PATTERN.match(cas)
    if not match:
        raise FormatError(f"not a CAS number: {raw!r}")
    body = match.group(1) + match.group(2)
    check = int(match.group(3))
    weighted = sum(w * int(d) for w, d in enumerate(reversed(body), start=1))
    if weighted % 10 != check:
        raise ChecksumError(f"check digit mismatch for {cas}")
    return cas


@dataclass(frozen=True)
class Compound:
    compound_id: str
    name: str
    cas: Optional[str] = None


@dataclass(frozen=True)
class ToxRecord:
    cas: str
    mutagenic: bool
    source_row: int


@dataclass
class ToxDataset:
    records: dict[str, ToxRecord]
    row_errors: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


_TRUE = {"1", "true", "yes"}
_FALSE = {"0", "false", "no"}


def load_tox_dataset(source) -> ToxDataset:
    """Load the Ames mutagenicity CSV (header "cas,mutagenic").

    Rows with invalid CAS numbers are collected as errors and skipped; duplicate
    CAS entries with conflicting labels abort the load.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    if "cas" not in header or "mutagenic" not in header:
        raise SchemaError(f"expected columns cas,mutagenic; got {header}")

    records: dict[str, ToxRecord] = {}
    errors: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        raw_cas = (row.get("cas") or "").strip()
        raw_label = (row.get("mutagenic") or "").strip().lower()
        try:
            cas = normalize_cas(raw_cas)
        except (FormatError, ChecksumError) as exc:
            errors.append(f"row {lineno}: {exc}")
            continue
        if raw_label in _TRUE:
            mutagenic = True
        elif raw_label in _FALSE:
            mutagenic = False
        else:
            errors.append(f"row {lineno}: unreadable mutagenic flag {raw_label!r}")
            continue
        existing = records.get(cas)
        if existing is not None:
            if existing.mutagenic != mutagenic:
                raise DuplicateConflict(
                    f"CAS {cas}: conflicting labels at rows {existing.source_row} and {lineno}"
                )
            continue
        records[cas] = ToxRecord(cas, mutagenic, lineno)
    return ToxDataset(records, errors)


class PathwayDbClient(Protocol):
    def fetch_compounds(self, organism_id: str) -> list[Compound]: ...


class FixturePathwayClient:
    """Replays organism compound inventories from a JSON fixture.

    Fixture shape: {"organisms": {"ORG": [{"compound_id": ..., "name": ..., "cas": ...}]}}
    """

    def __init__(self, fixture: dict):
        self.fixture = fixture
        self.calls = 0

    @classmethod
    def from_file(cls, path: Path) -> "FixturePathwayClient":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def fetch_compounds(self, organism_id: str) -> list[Compound]:
        self.calls += 1
        organisms = self.fixture.get("organisms", {})
        if organism_id not in organisms:
            raise UnknownOrganism(organism_id)
        return [
            Compound(c["compound_id"], c.get("name", ""), c.get("cas"))
            for c in organisms[organism_id]
        ]


class BioCycClient:
    """Credentialed HTTP adapter for a BioCyc-style web service."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        user: Optional[str] = None,
        password: Optional[str] = None,
        timeout: float = 60.0,
        rate_per_second: float = 1.0,
        retry: RetryPolicy = RetryPolicy(),
    ):
        self.base_url = (
            base_url or os.environ.get("BIOCYC_BASE_URL") or "https://websvc.biocyc.org"
        ).rstrip("/")
        self.user = user or os.environ.get("BIOCYC_USER")
        self.password = password or os.environ.get("BIOCYC_PASSWORD")
        self.retry = retry
        self._bucket = TokenBucket(rate_per_second)
        self._http = httpx.Client(timeout=timeout)
        self._authed = False

    def _login(self) -> None:
        if self._authed or not self.user:
            return
        resp = self._http.post(
            f"{self.base_url}/credentials/login/",
            data={"email": self.user, "password": self.password},
        )
        if resp.status_code in (401, 403):
            raise AuthError("login rejected")
        resp.raise_for_status()
        self._authed = True

    def fetch_compounds(self, organism_id: str) -> list[Compound]:
        self._login()

        def attempt() -> httpx.Response:
            self._bucket.acquire()
            try:
                resp = self._http.get(
                    f"{self.base_url}/xmlquery",
                    params={"query": f"[x:x<-{organism_id}^^compounds]", "detail": "full"},
                )
            except httpx.HTTPError as exc:
                raise TransportError(str(exc)) from exc
            if resp.status_code in (401, 403):
                raise AuthError("not authorised")
            if resp.status_code == 404:
                raise UnknownOrganism(organism_id)
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}")
            return resp

        resp = with_retries(attempt, self.retry)
        return _parse_biocyc_compounds(resp.text)


def _parse_biocyc_compounds(xml_text: str) -> list[Compound]:
    import xml.etree.ElementTree as ET

    root = ET.fromstring(xml_text)
    out = []
    for node in root.iter("Compound"):
        cid = node.get("frameid") or node.get("ID") or ""
        name = node.findtext("common-name") or cid
        cas = None
        for link in node.findall(".//dblink"):
            if (link.findtext("dblink-db") or "").upper() == "CAS":
                cas = link.findtext("dblink-oid")
        out.append(Compound(cid, name, cas))
    return out


class CompoundCache:
    """In-memory organism -> compounds cache, safe for concurrent screens."""

    def __init__(self):
        self._data: dict[str, list[Compound]] = {}
        self._lock = threading.Lock()

    def get(self, organism_id: str) -> Optional[list[Compound]]:
        with self._lock:
            return self._data.get(organism_id)

    def put(self, organism_id: str, compounds: list[Compound]) -> None:
        with self._lock:
            self._data[organism_id] = list(compounds)


def fetch_organism_compounds(
    organism_id: str,
    client: PathwayDbClient,
    cache: Optional[CompoundCache] = None,
) -> list[Compound]:
    """Fetch and deduplicate (by compound id) the organism's compound inventory."""
    if not organism_id:
        raise ValueError("organism_id must be non-empty")
    if cache is not None:
        hit = cache.get(organism_id)
        if hit is not None:
            return hit
    seen: dict[str, Compound] = {}
    for compound in client.fetch_compounds(organism_id):
        seen.setdefault(compound.compound_id, compound)
    result = list(seen.values())
    if cache is not None:
        cache.put(organism_id, result)
    return result


@dataclass
class ScreenReport:
    organism_id: str
    total_compounds: int
    with_cas: int
    flagged: list[tuple[Compound, ToxRecord]]
    non_mutagenic_matches: list[tuple[Compound, ToxRecord]] = field(default_factory=list)
    unmatchable: int = 0

    def to_json(self) -> dict:
        def pair(c: Compound, t: ToxRecord) -> dict:
            return {
                "compound_id": c.compound_id,
                "name": c.name,
                "cas": t.cas,
                "mutagenic": t.mutagenic,
            }

        return {
            "organism_id": self.organism_id,
            "total_compounds": self.total_compounds,
            "with_cas": self.with_cas,
            "unmatchable": self.unmatchable,
            "flagged": [pair(c, t) for c, t in self.flagged],
            "non_mutagenic_matches": [pair(c, t) for c, t in self.non_mutagenic_matches],
        }


def screen(
    organism_id: str,
    client: PathwayDbClient,
    tox: ToxDataset,
    cache: Optional[CompoundCache] = None,
) -> ScreenReport:
    """Flag mutagenic compounds: exact intersection on canonical CAS numbers."""
    if not tox.records:
        raise ValueError("toxicity dataset is empty")
    compounds = fetch_organism_compounds(organism_id, client, cache)
    flagged: list[tuple[Compound, ToxRecord]] = []
    negatives: list[tuple[Compound, ToxRecord]] = []
    with_cas = 0
    unmatchable = 0
    for compound in compounds:
        if not compound.cas:
            unmatchable += 1
            continue
        try:
            cas = normalize_cas(compound.cas)
        except (FormatError, ChecksumError):
            unmatchable += 1
            continue
        with_cas += 1
        record = tox.records.get(cas)
        if record is None:
            continue
        if record.mutagenic:
            flagged.append((compound, record))
        else:
            negatives.append((compound, record))
    flagged.sort(key=lambda pair: pair[0].compound_id)
    negatives.sort(key=lambda pair: pair[0].compound_id)
    return ScreenReport(
        organism_id, len(compounds), with_cas, flagged, negatives, unmatchable
    )
