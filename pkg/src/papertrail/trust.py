"""Transparency trust markers: funder verification and email anomalies.

Funding statements are mined for candidate funder names (capitalized phrases
after cue phrases such as "supported by"), which are then checked against a
local registry snapshot (``registry.csv``).  A funder with no registry match
is the strongest marker; near-duplicate author emails (dash vs underscore
variants of one address) and missing persistent identifiers complete the
severity scale:

* ``High``  - any unverified funder, or an author using two raw emails that
  collapse to one variant key;
* ``Low``   - only missing persistent identifiers;
* ``None``  - none of the above.

The scale is an artifact convention; registry lookups are entirely local
for reproducibility.
"""

from __future__ import annotations

import csv
import enum
import io
import re
from collections import Counter
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Optional, Sequence, Union

from .corpus import OrgType, PublicationRecord, _ORGTYPE_BY_KEY
from .errors import MissingRequiredColumn, NotAnEmail
from .resolution import (
    ResearcherProfile,
    email_variant_key,
    mention_source_id,
    source_to_profile,
)

DEFAULT_CUE_PHRASES = (
    "supported by",
    "support by",
    "funded by",
    "funding from",
    "grant from",
    "grants from",
    "financed by",
)

#: Lowercase words allowed inside a capitalized funder phrase.
_CONNECTORS = frozenset(
    {"of", "for", "and", "the", "de", "da", "do", "del", "della", "di", "der",
     "und", "para", "la", "le", "les", "van", "von", "a", "e", "y"}
)

_TOKEN = re.compile(r"[^\s,;.()\[\]]+")


class Severity(enum.Enum):
    NONE = "None"
    LOW = "Low"
    HIGH = "High"


@dataclass(frozen=True)
class RegistryEntry:
    registry_id: str
    canonical_name: str
    aliases: tuple[str, ...] = ()
    country: Optional[str] = None
    org_type: OrgType = OrgType.RESEARCH_INSTITUTION


@dataclass(frozen=True)
class FunderCandidate:
    name: str
    location: Optional[str] = None


@dataclass(frozen=True)
class EmailAnomaly:
    profile_id: str
    variant_key: str
    emails: tuple[str, ...]


@dataclass(frozen=True)
class TrustMarkerReport:
    publication_id: str
    matched_funders: tuple[tuple[str, str], ...]  # (candidate name, registry_id)
    unmatched_funders: tuple[str, ...]
    email_anomalies: tuple[EmailAnomaly, ...]
    missing_identifier_profiles: tuple[str, ...]
    severity: Severity


def fold_org_name(name: str) -> str:
    """Lowercase, strip punctuation and leading articles, collapse whitespace."""
    lowered = re.sub(r"[^\w\s]", " ", name.lower())
    words = lowered.split()
    while words and words[0] in {"the", "a", "an"}:
        words = words[1:]
    return " ".join(words)


# ---------------------------------------------------------------------------
# registry.csv
# ---------------------------------------------------------------------------

REGISTRY_COLUMNS = ("registry_id", "canonical_name", "aliases", "country", "org_type")


def parse_registry(source: Union[bytes, BinaryIO]) -> list[RegistryEntry]:
    """Read a registry snapshot; aliases are pipe-separated in one cell."""
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    reader = csv.DictReader(io.TextIOWrapper(source, encoding="utf-8", newline=""))
    if reader.fieldnames is None:
        raise MissingRequiredColumn("empty registry file")
    fields = {name.strip().lower() for name in reader.fieldnames}
    for required in ("registry_id", "canonical_name"):
        if required not in fields:
            raise MissingRequiredColumn(f"registry.csv is missing column {required!r}")
    entries = []
    for row in reader:
        row = {k.strip().lower(): (v or "") for k, v in row.items() if k}
        aliases = tuple(a.strip() for a in row.get("aliases", "").split("|") if a.strip())
        org_type = _ORGTYPE_BY_KEY.get(
            "".join(ch for ch in row.get("org_type", "") if ch.isalnum()).lower(),
            OrgType.RESEARCH_INSTITUTION,
        )
        entries.append(
            RegistryEntry(
                registry_id=row["registry_id"].strip(),
                canonical_name=row["canonical_name"].strip(),
                aliases=aliases,
                country=row.get("country", "").strip().upper() or None,
                org_type=org_type,
            )
        )
    return entries


def serialize_registry(entries: Iterable[RegistryEntry]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(REGISTRY_COLUMNS)
    for e in entries:
        writer.writerow(
            [e.registry_id, e.canonical_name, "|".join(e.aliases), e.country or "",
             e.org_type.value]
        )
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Funder extraction and verification
# ---------------------------------------------------------------------------


def _is_phrase_token(token: str) -> bool:
    if token.lower() in _CONNECTORS:
        return True
    return token[:1].isupper() or token[:1].isdigit() or token.isupper()


def _capitalized_phrase(segment: str) -> str:
    """Longest leading run of capitalized words (lowercase connectors allowed)."""
    words = []
    for token in _TOKEN.findall(segment):
        if _is_phrase_token(token):
            words.append(token)
        else:
            break
    while words and words[0].lower() in _CONNECTORS:
        words.pop(0)
    while words and words[-1].lower() in _CONNECTORS:
        words.pop()
    return " ".join(words)


def _location_like(segment: str) -> bool:
    tokens = segment.split()
    return 0 < len(tokens) <= 3 and all(t[:1].isupper() for t in tokens)


def _strip_location(phrase_segments: list[str]) -> tuple[str, Optional[str]]:
    """Split trailing ", City, Country"-style segments off a candidate."""
    name_parts = list(phrase_segments)
    location: list[str] = []
    while len(name_parts) > 1 and _location_like(name_parts[-1]) and len(location) < 2:
        location.insert(0, name_parts.pop())
    if location and not name_parts:
        name_parts, location = location, []
    return ", ".join(name_parts), (", ".join(location) or None)


def extract_funder_mentions(
    funding_text: Optional[str],
    cue_phrases: Sequence[str] = DEFAULT_CUE_PHRASES,
) -> list[FunderCandidate]:
    """Pull candidate funder names out of free-text funding statements.

    A candidate is the maximal capitalized phrase following a cue phrase;
    trailing location clauses (", Dhaka, Bangladesh") are stripped into the
    candidate's ``location``.  " and the " starts a new candidate; a bare
    "and" is treated as part of the name (many agencies contain one).
    """
    if not funding_text:
        return []
    text = funding_text
    lower = text.lower()
    candidates: list[FunderCandidate] = []
    seen: set[str] = set()
    spans: list[int] = []
    for cue in cue_phrases:
        start = 0
        while True:
            hit = lower.find(cue, start)
            if hit < 0:
                break
            spans.append(hit + len(cue))
            start = hit + len(cue)
    for begin in sorted(spans):
        end = len(text)
        for terminator in ".;":
            t = text.find(terminator, begin)
            if 0 <= t < end:
                end = t
        clause = text[begin:end]
        for chunk in re.split(r",?\s+and\s+the\s+|,\s+as\s+well\s+as\s+", clause):
            segments = [s.strip() for s in chunk.split(",")]
            phrases = []
            for segment in segments:
                phrase = _capitalized_phrase(segment)
                if not phrase:
                    break
                phrases.append(phrase)
            if not phrases:
                continue
            name, location = _strip_location(phrases)
            if name and name.lower() not in seen:
                seen.add(name.lower())
                candidates.append(FunderCandidate(name=name, location=location))
    return candidates


def verify_funders(
    candidates: Iterable[FunderCandidate],
    registry: Iterable[RegistryEntry],
) -> tuple[list[tuple[str, str]], list[str]]:
    """Split candidates into (name, registry_id) matches and unmatched names.

    Matching is case/punctuation-folded equality against canonical names and
    aliases; anything else is unmatched.
    """
    index: dict[str, str] = {}
    for entry in registry:
        for name in (entry.canonical_name, *entry.aliases):
            index.setdefault(fold_org_name(name), entry.registry_id)
    matched: list[tuple[str, str]] = []
    unmatched: list[str] = []
    for candidate in candidates:
        registry_id = index.get(fold_org_name(candidate.name))
        if registry_id is None:
            unmatched.append(candidate.name)
        else:
            matched.append((candidate.name, registry_id))
    return matched, unmatched


def _record_email_anomalies(
    record: PublicationRecord,
    profile_lookup: dict[str, ResearcherProfile],
) -> list[EmailAnomaly]:
    anomalies = []
    for mention in record.authors:
        by_key: dict[str, list[str]] = {}
        for email in mention.emails:
            try:
                by_key.setdefault(email_variant_key(email), []).append(email)
            except NotAnEmail:
                continue
        for key, emails in sorted(by_key.items()):
            if len(set(emails)) >= 2:
                sid = mention_source_id(mention)
                profile = profile_lookup.get(sid)
                anomalies.append(
                    EmailAnomaly(
                        profile_id=profile.profile_id if profile else sid,
                        variant_key=key,
                        emails=tuple(sorted(set(emails))),
                    )
                )
    return anomalies


def publication_trust_report(
    record: PublicationRecord,
    registry: Iterable[RegistryEntry],
    profiles: Iterable[ResearcherProfile],
    cue_phrases: Sequence[str] = DEFAULT_CUE_PHRASES,
) -> TrustMarkerReport:
    """Assess one screened, resolved record's transparency markers."""
    text_parts = [t for t in (record.funding_statement, record.acknowledgements) if t]
    candidates = extract_funder_mentions(" ".join(text_parts), cue_phrases)
    matched, unmatched = verify_funders(candidates, registry)
    lookup = source_to_profile(profiles)
    anomalies = _record_email_anomalies(record, lookup)
    missing = []
    for mention in record.authors:
        sid = mention_source_id(mention)
        profile = lookup.get(sid)
        if profile is not None and not profile.has_persistent_identifier:
            missing.append(profile.profile_id)
        elif profile is None and not (mention.source_researcher_id or mention.orcid):
            missing.append(sid)
    if unmatched or anomalies:
        severity = Severity.HIGH
    elif missing:
        severity = Severity.LOW
    else:
        severity = Severity.NONE
    return TrustMarkerReport(
        publication_id=record.publication_id,
        matched_funders=tuple(matched),
        unmatched_funders=tuple(unmatched),
        email_anomalies=tuple(anomalies),
        missing_identifier_profiles=tuple(dict.fromkeys(missing)),
        severity=severity,
    )


@dataclass(frozen=True)
class CorpusTrustSummary:
    missing_identifier_author_count: int
    unmatched_funder_names: tuple[tuple[str, int], ...]  # (name, record count)
    high_severity_publication_count: int

    def to_json(self) -> dict:
        return {
            "missing_identifier_author_count": self.missing_identifier_author_count,
            "unmatched_funder_names": [
                {"name": name, "publications": count}
                for name, count in self.unmatched_funder_names
            ],
            "high_severity_publication_count": self.high_severity_publication_count,
        }


def corpus_trust_summary(
    records: Iterable[PublicationRecord],
    profiles: Iterable[ResearcherProfile],
    registry: Iterable[RegistryEntry],
    cue_phrases: Sequence[str] = DEFAULT_CUE_PHRASES,
) -> tuple[CorpusTrustSummary, list[TrustMarkerReport]]:
    """Corpus-level marker counts plus the per-publication reports."""
    profiles = list(profiles)
    registry = list(registry)
    reports = [
        publication_trust_report(record, registry, profiles, cue_phrases)
        for record in records
    ]
    unmatched_freq: Counter = Counter()
    for report in reports:
        for name in set(report.unmatched_funders):
            unmatched_freq[name] += 1
    missing_count = sum(1 for p in profiles if not p.has_persistent_identifier)
    summary = CorpusTrustSummary(
        missing_identifier_author_count=missing_count,
        unmatched_funder_names=tuple(
            sorted(unmatched_freq.items(), key=lambda kv: (-kv[1], kv[0]))
        ),
        high_severity_publication_count=sum(
            1 for r in reports if r.severity is Severity.HIGH
        ),
    )
    return summary, reports
