"""Consolidation of source researcher IDs into distinct researcher profiles.

Source exports identify authors by per-database researcher IDs; one person
can carry several (name variants, moved institutions) and some authors carry
none at all.  This module:

* assigns a deterministic synthetic ID to mentions without a source ID
  (derived from the folded name plus first affiliation), flagged as lacking
  a persistent identifier;
* applies a *curated* merge map (``merges.csv``) as the single authority for
  collapsing IDs;
* proposes additional merges from evidence (shared normalized email key, or
  same folded name plus a shared organization registry ID) for a human to
  review - proposals are never auto-applied;
* aggregates per-profile publication counts by year, optionally augmented
  from a career-history file (``careers.csv``) so the temporal analysis can
  see publications outside the screened corpus.
"""

from __future__ import annotations

import csv
import io
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, Union

from .corpus import AuthorMention, PublicationRecord
from .errors import ConflictingMerge, NotAnEmail

_SEPARATOR_RUN = re.compile(r"[._-]+")
_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def email_variant_key(email: str) -> str:
    """Collapse cosmetic local-part variants of an email to one key.

    Lowercases the address and collapses runs of ``.``, ``-`` and ``_`` in
    the local part to a single ``.``; the domain is kept as-is (lowercased).
    ``pre-post@hotmail.com`` and ``pre_post@hotmail.com`` share a key.
    """
    parts = email.strip().lower().split("@")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        raise NotAnEmail(f"not an email address: {email!r}")
    local, domain = parts
    return f"{_SEPARATOR_RUN.sub('.', local)}@{domain}"


def fold_name(name: str) -> str:
    """Case- and diacritic-fold a personal name, collapsing punctuation."""
    decomposed = unicodedata.normalize("NFKD", name)
    ascii_only = decomposed.encode("ascii", "ignore").decode("ascii").lower()
    return _NON_ALNUM.sub(" ", ascii_only).strip()


def name_key(name: str) -> tuple:
    """(surname, given-name initials) - insensitive to initial expansion.

    "J. Smith" and "John Smith" map to the same key; the comparison helper
    :func:`names_compatible` additionally allows one initial sequence to be
    a prefix of the other ("John Smith" vs "John A Smith").
    """
    tokens = fold_name(name).split()
    if not tokens:
        return ("", ())
    surname = tokens[-1]
    initials = tuple(t[0] for t in tokens[:-1])
    return (surname, initials)


def names_compatible(a: str, b: str) -> bool:
    sa, ia = name_key(a)
    sb, ib = name_key(b)
    if not sa or sa != sb:
        return False
    shorter, longer = sorted((ia, ib), key=len)
    return longer[: len(shorter)] == shorter


def synthetic_source_id(raw_name: str, first_affiliation: str) -> str:
    """Deterministic stand-in ID for a mention without a researcher ID."""
    name_part = fold_name(raw_name).replace(" ", "-") or "anonymous"
    aff_part = fold_name(first_affiliation).replace(" ", "-") or "unaffiliated"
    return f"noid:{name_part}|{aff_part}"


def mention_source_id(mention: AuthorMention) -> str:
    """The source ID of a mention, synthesizing one when absent."""
    if mention.source_researcher_id:
        return mention.source_researcher_id
    first_affiliation = mention.affiliation_texts[0] if mention.affiliation_texts else ""
    return synthetic_source_id(mention.raw_name, first_affiliation)


@dataclass(frozen=True)
class MergeEntry:
    source_ids: frozenset[str]
    canonical_name: str
    profile_key: Optional[str] = None


@dataclass(frozen=True)
class MergeMap:
    entries: tuple[MergeEntry, ...]
    provenance: str = "Curated"  # or "Proposed"

    def __post_init__(self):
        seen: set[str] = set()
        for entry in self.entries:
            overlap = seen & entry.source_ids
            if overlap:
                raise ConflictingMerge(
                    f"source IDs assigned to two merge entries: {sorted(overlap)}"
                )
            seen.update(entry.source_ids)


@dataclass(frozen=True)
class ResearcherProfile:
    """A consolidated author identity: the unit of all downstream analysis."""

    profile_id: str
    merged_source_ids: frozenset[str]
    canonical_name: str
    has_persistent_identifier: bool
    emails: frozenset[str] = frozenset()
    countries: frozenset[str] = frozenset()
    pubs_by_year: dict[int, int] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# merges.csv / careers.csv / profiles.json
# ---------------------------------------------------------------------------


def parse_merges(source: Union[bytes, BinaryIO]) -> MergeMap:
    """Read a curated merge map: columns source_id, profile_key, canonical_name."""
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    reader = csv.DictReader(io.TextIOWrapper(source, encoding="utf-8", newline=""))
    groups: dict[str, list[str]] = {}
    names: dict[str, str] = {}
    for row in reader:
        key = row["profile_key"].strip()
        groups.setdefault(key, []).append(row["source_id"].strip())
        names[key] = row["canonical_name"].strip()
    entries = tuple(
        MergeEntry(
            source_ids=frozenset(ids), canonical_name=names[key], profile_key=key
        )
        for key, ids in sorted(groups.items())
    )
    return MergeMap(entries=entries, provenance="Curated")


def serialize_merges(merge_map: MergeMap) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["source_id", "profile_key", "canonical_name"])
    for entry in sorted(merge_map.entries, key=lambda e: e.profile_key or ""):
        for source_id in sorted(entry.source_ids):
            writer.writerow([source_id, entry.profile_key or "", entry.canonical_name])
    return buf.getvalue().encode("utf-8")


def parse_careers(source: Union[bytes, BinaryIO]) -> dict[str, dict[int, int]]:
    """Read career history: columns profile_id, year, count."""
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    reader = csv.DictReader(io.TextIOWrapper(source, encoding="utf-8", newline=""))
    history: dict[str, dict[int, int]] = {}
    for row in reader:
        per_year = history.setdefault(row["profile_id"].strip(), {})
        year = int(row["year"])
        per_year[year] = per_year.get(year, 0) + int(row["count"])
    return history


def profiles_to_json(profiles: Iterable[ResearcherProfile]) -> bytes:
    payload = {
        "profiles": [
            {
                "profile_id": p.profile_id,
                "merged_source_ids": sorted(p.merged_source_ids),
                "canonical_name": p.canonical_name,
                "has_persistent_identifier": p.has_persistent_identifier,
                "emails": sorted(p.emails),
                "countries": sorted(p.countries),
                "pubs_by_year": {str(y): c for y, c in sorted(p.pubs_by_year.items())},
            }
            for p in profiles
        ]
    }
    return (json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode(
        "utf-8"
    )


def profiles_from_json(source: Union[bytes, str]) -> list[ResearcherProfile]:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    payload = json.loads(source)
    if not isinstance(payload, dict) or "profiles" not in payload:
        raise ValueError("not a profiles file: top-level 'profiles' key missing")
    return [
        ResearcherProfile(
            profile_id=p["profile_id"],
            merged_source_ids=frozenset(p["merged_source_ids"]),
            canonical_name=p["canonical_name"],
            has_persistent_identifier=p["has_persistent_identifier"],
            emails=frozenset(p.get("emails", ())),
            countries=frozenset(p.get("countries", ())),
            pubs_by_year={int(y): c for y, c in p.get("pubs_by_year", {}).items()},
        )
        for p in payload["profiles"]
    ]


# ---------------------------------------------------------------------------
# Merge proposal and resolution
# ---------------------------------------------------------------------------


def propose_merges(mentions: Iterable[AuthorMention]) -> MergeMap:
    """Propose merges between source IDs from observable evidence.

    Two IDs are proposed for merging when they share an email variant key,
    or share a compatible folded name plus at least one organization
    registry ID.  IDs carrying different ORCIDs are never proposed together.
    Output is advisory (`provenance="Proposed"`); :func:`resolve` only ever
    applies the curated map.
    """
    by_id: dict[str, list[AuthorMention]] = {}
    order: list[str] = []
    for mention in mentions:
        sid = mention_source_id(mention)
        if sid not in by_id:
            order.append(sid)
        by_id.setdefault(sid, []).append(mention)

    email_keys: dict[str, set[str]] = {}
    org_ids: dict[str, set[str]] = {}
    orcids: dict[str, set[str]] = {}
    names: dict[str, list[str]] = {}
    for sid in order:
        keys = set()
        for mention in by_id[sid]:
            for email in mention.emails:
                try:
                    keys.add(email_variant_key(email))
                except NotAnEmail:
                    continue
        email_keys[sid] = keys
        org_ids[sid] = {o for m in by_id[sid] for o in m.org_registry_ids}
        orcids[sid] = {m.orcid for m in by_id[sid] if m.orcid}
        names[sid] = [m.raw_name for m in by_id[sid]]

    parent = {sid: sid for sid in order}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    def conflicting_orcids(a: str, b: str) -> bool:
        return bool(orcids[a]) and bool(orcids[b]) and not (orcids[a] & orcids[b])

    for i, a in enumerate(order):
        for b in order[i + 1 :]:
            if conflicting_orcids(a, b):
                continue
            if email_keys[a] & email_keys[b]:
                union(a, b)
                continue
            if org_ids[a] & org_ids[b] and any(
                names_compatible(na, nb) for na in names[a] for nb in names[b]
            ):
                union(a, b)

    components: dict[str, list[str]] = {}
    for sid in order:
        components.setdefault(find(sid), []).append(sid)
    entries = []
    for root in sorted(components):
        ids = components[root]
        if len(ids) < 2:
            continue
        name_counts = Counter(n for sid in ids for n in names[sid])
        canonical = name_counts.most_common(1)[0][0]
        entries.append(
            MergeEntry(source_ids=frozenset(ids), canonical_name=canonical)
        )
    return MergeMap(entries=tuple(entries), provenance="Proposed")


def resolve(
    records: Iterable[PublicationRecord],
    curated: Optional[MergeMap] = None,
    careers: Optional[dict[str, dict[int, int]]] = None,
) -> list[ResearcherProfile]:
    """Map every author mention to exactly one researcher profile.

    Only the curated map merges IDs; unmapped source IDs become singleton
    profiles keyed by the ID itself.  ``pubs_by_year`` counts corpus author
    mentions per publication year, plus any career-history counts supplied
    for the profile key.  Profiles are returned sorted by profile_id.
    """
    curated = curated or MergeMap(entries=())
    id_to_entry: dict[str, MergeEntry] = {}
    for entry in curated.entries:
        for sid in entry.source_ids:
            if sid in id_to_entry:
                raise ConflictingMerge(f"source ID {sid!r} appears in two entries")
            id_to_entry[sid] = entry

    class _Agg:
        __slots__ = ("source_ids", "names", "emails", "countries", "years", "persistent")

        def __init__(self):
            self.source_ids: set[str] = set()
            self.names: Counter = Counter()
            self.emails: set[str] = set()
            self.countries: set[str] = set()
            self.years: dict[int, int] = {}
            self.persistent = False

    aggregates: dict[str, _Agg] = {}

    for record in records:
        for mention in record.authors:
            sid = mention_source_id(mention)
            entry = id_to_entry.get(sid)
            if entry is not None:
                key = entry.profile_key or min(entry.source_ids)
            else:
                key = sid
            agg = aggregates.setdefault(key, _Agg())
            agg.source_ids.add(sid)
            agg.names[mention.raw_name] += 1
            agg.emails.update(mention.emails)
            agg.countries.update(mention.countries)
            agg.years[record.pub_year] = agg.years.get(record.pub_year, 0) + 1
            if mention.source_researcher_id or mention.orcid:
                agg.persistent = True

    careers = careers or {}
    profiles = []
    for key in sorted(aggregates):
        agg = aggregates[key]
        entry = next(
            (e for e in curated.entries if (e.profile_key or min(e.source_ids)) == key),
            None,
        )
        if entry is not None:
            canonical = entry.canonical_name
        else:
            most_common = agg.names.most_common()
            top = most_common[0][1]
            canonical = sorted(n for n, c in most_common if c == top)[0]
        years = dict(agg.years)
        for year, count in careers.get(key, {}).items():
            years[year] = years.get(year, 0) + count
        profiles.append(
            ResearcherProfile(
                profile_id=key,
                merged_source_ids=frozenset(agg.source_ids),
                canonical_name=canonical,
                has_persistent_identifier=agg.persistent,
                emails=frozenset(agg.emails),
                countries=frozenset(agg.countries),
                pubs_by_year=dict(sorted(years.items())),
            )
        )
    return profiles


def source_to_profile(profiles: Iterable[ResearcherProfile]) -> dict[str, ResearcherProfile]:
    """Lookup table from every merged source ID to its profile."""
    table: dict[str, ResearcherProfile] = {}
    for profile in profiles:
        for sid in profile.merged_source_ids:
            table[sid] = profile
    return table
