"""Domain model and IO for publication-metadata exports.

The toolkit consumes flat exports only (no live database access).  Two
encodings of the same record set are supported: ``corpus.csv`` (RFC 4180,
semicolon-separated list cells, ``|`` between values that belong to one
author) and ``corpus.jsonl`` (one object per line, nested author objects).
Exact headers are documented in ``docs/formats.md``.

All types are plain frozen dataclasses; invariant checking is separate
(:func:`validate_record`) so that malformed-but-parseable data can be
inspected rather than rejected at construction.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import BinaryIO, Iterable, Optional, Union

from .errors import CorpusRejected, MissingRequiredColumn, UnsupportedFormat

log = logging.getLogger(__name__)

LIST_SEP = ";"
INNER_SEP = "|"

#: ISO 3166-1 alpha-2 assigned codes (snapshot; used for validation only).
ISO_COUNTRY_CODES = frozenset(
    """
    AD AE AF AG AI AL AM AO AQ AR AS AT AU AW AX AZ
    BA BB BD BE BF BG BH BI BJ BL BM BN BO BQ BR BS BT BV BW BY BZ
    CA CC CD CF CG CH CI CK CL CM CN CO CR CU CV CW CX CY CZ
    DE DJ DK DM DO DZ EC EE EG EH ER ES ET FI FJ FK FM FO FR
    GA GB GD GE GF GG GH GI GL GM GN GP GQ GR GS GT GU GW GY
    HK HM HN HR HT HU ID IE IL IM IN IO IQ IR IS IT JE JM JO JP
    KE KG KH KI KM KN KP KR KW KY KZ LA LB LC LI LK LR LS LT LU LV LY
    MA MC MD ME MF MG MH MK ML MM MN MO MP MQ MR MS MT MU MV MW MX MY MZ
    NA NC NE NF NG NI NL NO NP NR NU NZ OM
    PA PE PF PG PH PK PL PM PN PR PS PT PW PY QA RE RO RS RU RW
    SA SB SC SD SE SG SH SI SJ SK SL SM SN SO SR SS ST SV SX SY SZ
    TC TD TF TG TH TJ TK TL TM TN TO TR TT TV TW TZ
    UA UG UM US UY UZ VA VC VE VG VI VN VU WF WS YE YT ZA ZM ZW
    """.split()
)


class DocumentType(enum.Enum):
    RESEARCH_ARTICLE = "ResearchArticle"
    REVIEW_ARTICLE = "ReviewArticle"
    EDITORIAL = "Editorial"
    RESEARCH_CHAPTER = "ResearchChapter"
    RETRACTION_NOTICE = "RetractionNotice"
    OTHER = "Other"


class OrgType(enum.Enum):
    RESEARCH_INSTITUTION = "ResearchInstitution"
    TEACHING_INSTITUTION = "TeachingInstitution"
    COMPANY = "Company"
    NON_ACADEMIC = "NonAcademic"
    UNREGISTERED = "Unregistered"


_DOCTYPE_BY_KEY = {dt.value.lower(): dt for dt in DocumentType}
_ORGTYPE_BY_KEY = {ot.value.lower(): ot for ot in OrgType}


def parse_document_type(text: str) -> DocumentType:
    """Map an export's document-type string onto the enum (Other if unknown)."""
    key = "".join(ch for ch in text if ch.isalnum()).lower()
    return _DOCTYPE_BY_KEY.get(key, DocumentType.OTHER)


@dataclass(frozen=True)
class AuthorMention:
    """One author slot on one publication, as exported."""

    raw_name: str
    source_researcher_id: Optional[str] = None
    orcid: Optional[str] = None
    emails: tuple[str, ...] = ()
    affiliation_texts: tuple[str, ...] = ()
    org_registry_ids: tuple[str, ...] = ()
    countries: tuple[str, ...] = ()


@dataclass(frozen=True)
class FunderMention:
    """A funder as named in the export's structured funder field."""

    name: str
    registry_id: Optional[str] = None
    country: Optional[str] = None


@dataclass(frozen=True)
class Organization:
    name: str
    registry_id: Optional[str] = None
    org_type: OrgType = OrgType.UNREGISTERED
    country: Optional[str] = None


@dataclass(frozen=True)
class PublicationRecord:
    """One bibliographic record with authors, funders, grants, citations."""

    publication_id: str
    title: str
    publisher: str
    source_title: str
    pub_year: int
    document_type: DocumentType
    times_cited: int
    authors: tuple[AuthorMention, ...]
    doi: Optional[str] = None
    pmid: Optional[str] = None
    pmcid: Optional[str] = None
    abstract: Optional[str] = None
    acknowledgements: Optional[str] = None
    funding_statement: Optional[str] = None
    issn: Optional[str] = None
    online_year: Optional[int] = None
    corresponding_author_ids: frozenset[str] = frozenset()
    funders: tuple[FunderMention, ...] = ()
    grant_ids: tuple[str, ...] = ()
    fields_of_research: tuple[str, ...] = ()
    reviewer_affiliations: Optional[str] = None


@dataclass(frozen=True)
class GrantRecord:
    """A research grant with its funder, start year, and named researchers."""

    grant_id: str
    funder_name: str
    funder_country: str
    start_year: int
    amount: Optional[Decimal]
    currency: str
    researcher_ids: frozenset[str]


@dataclass(frozen=True)
class MalformedRow:
    """A collected (non-fatal) parse problem for one input row."""

    line: int
    reason: str


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    field: str
    message: str


# ---------------------------------------------------------------------------
# corpus.csv / corpus.jsonl
# ---------------------------------------------------------------------------

#: Canonical header order; parsing is case-insensitive against these names.
CORPUS_COLUMNS = (
    "publication_id",
    "doi",
    "pmid",
    "pmcid",
    "title",
    "abstract",
    "acknowledgements",
    "funding_statement",
    "publisher",
    "source_title",
    "issn",
    "pub_year",
    "online_year",
    "document_type",
    "times_cited",
    "fields_of_research",
    "grant_ids",
    "corresponding_author_ids",
    "reviewer_affiliations",
    "authors",
    "author_ids",
    "author_orcids",
    "author_emails",
    "author_affiliations",
    "author_org_ids",
    "author_countries",
    "funders",
    "funder_ids",
    "funder_countries",
)

REQUIRED_COLUMNS = (
    "publication_id",
    "title",
    "publisher",
    "source_title",
    "pub_year",
    "document_type",
    "times_cited",
    "authors",
)

#: Share of malformed data rows above which the whole corpus is rejected.
MAX_BAD_ROW_SHARE = 0.10


def _split(cell: str, sep: str = LIST_SEP) -> list[str]:
    if not cell:
        return []
    return [part.strip() for part in cell.split(sep)]


def _opt(cell: str) -> Optional[str]:
    cell = cell.strip()
    return cell or None


def _aligned(cell: str, n: int, column: str) -> list[str]:
    """Split a per-author column and check it aligns with the author count."""
    if not cell.strip():
        return [""] * n
    parts = cell.split(LIST_SEP)
    if len(parts) != n:
        raise ValueError(f"{column} has {len(parts)} entries for {n} authors")
    return [p.strip() for p in parts]


def _row_to_record(row: dict[str, str]) -> PublicationRecord:
    pub_id = row.get("publication_id", "").strip()
    if not pub_id:
        raise ValueError("missing publication_id")
    names = _split(row.get("authors", ""))
    n = len(names)
    ids = _aligned(row.get("author_ids", ""), n, "author_ids")
    orcids = _aligned(row.get("author_orcids", ""), n, "author_orcids")
    emails = _aligned(row.get("author_emails", ""), n, "author_emails")
    affs = _aligned(row.get("author_affiliations", ""), n, "author_affiliations")
    orgs = _aligned(row.get("author_org_ids", ""), n, "author_org_ids")
    countries = _aligned(row.get("author_countries", ""), n, "author_countries")
    authors = tuple(
        AuthorMention(
            raw_name=names[i],
            source_researcher_id=_opt(ids[i]),
            orcid=_opt(orcids[i]),
            emails=tuple(_split(emails[i], INNER_SEP)),
            affiliation_texts=tuple(_split(affs[i], INNER_SEP)),
            org_registry_ids=tuple(_split(orgs[i], INNER_SEP)),
            countries=tuple(c.upper() for c in _split(countries[i], INNER_SEP)),
        )
        for i in range(n)
    )
    funder_names = _split(row.get("funders", ""))
    funder_ids = _aligned(row.get("funder_ids", ""), len(funder_names), "funder_ids")
    funder_countries = _aligned(
        row.get("funder_countries", ""), len(funder_names), "funder_countries"
    )
    funders = tuple(
        FunderMention(
            name=funder_names[i],
            registry_id=_opt(funder_ids[i]),
            country=_opt(funder_countries[i]),
        )
        for i in range(len(funder_names))
    )
    online_year = row.get("online_year", "").strip()
    return PublicationRecord(
        publication_id=pub_id,
        doi=_opt(row.get("doi", "")),
        pmid=_opt(row.get("pmid", "")),
        pmcid=_opt(row.get("pmcid", "")),
        title=row.get("title", "").strip(),
        abstract=_opt(row.get("abstract", "")),
        acknowledgements=_opt(row.get("acknowledgements", "")),
        funding_statement=_opt(row.get("funding_statement", "")),
        publisher=row.get("publisher", "").strip(),
        source_title=row.get("source_title", "").strip(),
        issn=_opt(row.get("issn", "")),
        pub_year=int(row.get("pub_year", "").strip()),
        online_year=int(online_year) if online_year else None,
        document_type=parse_document_type(row.get("document_type", "")),
        times_cited=int(row.get("times_cited", "").strip()),
        fields_of_research=tuple(_split(row.get("fields_of_research", ""))),
        grant_ids=tuple(_split(row.get("grant_ids", ""))),
        corresponding_author_ids=frozenset(
            _split(row.get("corresponding_author_ids", ""))
        ),
        reviewer_affiliations=_opt(row.get("reviewer_affiliations", "")),
        authors=authors,
        funders=funders,
    )


def _author_to_json(a: AuthorMention) -> dict:
    return {
        "raw_name": a.raw_name,
        "source_researcher_id": a.source_researcher_id,
        "orcid": a.orcid,
        "emails": list(a.emails),
        "affiliation_texts": list(a.affiliation_texts),
        "org_registry_ids": list(a.org_registry_ids),
        "countries": list(a.countries),
    }


def _author_from_json(obj: dict) -> AuthorMention:
    return AuthorMention(
        raw_name=obj["raw_name"],
        source_researcher_id=obj.get("source_researcher_id"),
        orcid=obj.get("orcid"),
        emails=tuple(obj.get("emails", ())),
        affiliation_texts=tuple(obj.get("affiliation_texts", ())),
        org_registry_ids=tuple(obj.get("org_registry_ids", ())),
        countries=tuple(obj.get("countries", ())),
    )


def record_to_json(record: PublicationRecord) -> dict:
    """Plain-dict form of a record (the jsonl row schema)."""
    return {
        "publication_id": record.publication_id,
        "doi": record.doi,
        "pmid": record.pmid,
        "pmcid": record.pmcid,
        "title": record.title,
        "abstract": record.abstract,
        "acknowledgements": record.acknowledgements,
        "funding_statement": record.funding_statement,
        "publisher": record.publisher,
        "source_title": record.source_title,
        "issn": record.issn,
        "pub_year": record.pub_year,
        "online_year": record.online_year,
        "document_type": record.document_type.value,
        "times_cited": record.times_cited,
        "fields_of_research": list(record.fields_of_research),
        "grant_ids": list(record.grant_ids),
        "corresponding_author_ids": sorted(record.corresponding_author_ids),
        "reviewer_affiliations": record.reviewer_affiliations,
        "authors": [_author_to_json(a) for a in record.authors],
        "funders": [
            {"name": f.name, "registry_id": f.registry_id, "country": f.country}
            for f in record.funders
        ],
    }


def record_from_json(obj: dict) -> PublicationRecord:
    if not str(obj.get("publication_id", "")).strip():
        raise ValueError("missing publication_id")
    return PublicationRecord(
        publication_id=obj["publication_id"],
        doi=obj.get("doi"),
        pmid=obj.get("pmid"),
        pmcid=obj.get("pmcid"),
        title=obj.get("title", ""),
        abstract=obj.get("abstract"),
        acknowledgements=obj.get("acknowledgements"),
        funding_statement=obj.get("funding_statement"),
        publisher=obj.get("publisher", ""),
        source_title=obj.get("source_title", ""),
        issn=obj.get("issn"),
        pub_year=int(obj["pub_year"]),
        online_year=int(obj["online_year"]) if obj.get("online_year") else None,
        document_type=parse_document_type(obj.get("document_type", "")),
        times_cited=int(obj["times_cited"]),
        fields_of_research=tuple(obj.get("fields_of_research", ())),
        grant_ids=tuple(obj.get("grant_ids", ())),
        corresponding_author_ids=frozenset(obj.get("corresponding_author_ids", ())),
        reviewer_affiliations=obj.get("reviewer_affiliations"),
        authors=tuple(_author_from_json(a) for a in obj.get("authors", ())),
        funders=tuple(
            FunderMention(
                name=f["name"],
                registry_id=f.get("registry_id"),
                country=f.get("country"),
            )
            for f in obj.get("funders", ())
        ),
    )


def parse_corpus(
    source: Union[bytes, BinaryIO],
    format: str = "csv",
    issues: Optional[list[MalformedRow]] = None,
) -> list[PublicationRecord]:
    """Parse a corpus export into records, preserving row order.

    Parameters
    ----------
    source : bytes or binary file-like
        UTF-8 encoded ``csv`` or ``jsonl`` content.
    format : {"csv", "jsonl"}
    issues : list, optional
        If given, collected :class:`MalformedRow` entries are appended here.
        Malformed rows are skipped, not fatal, unless more than 10% of the
        data rows fail (then :class:`CorpusRejected` is raised).

    Raises
    ------
    MissingRequiredColumn
        A required CSV header is absent.
    CorpusRejected
        Too large a share of rows was malformed.
    """
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    collected: list[MalformedRow] = issues if issues is not None else []
    if format == "csv":
        records = _parse_csv(source, collected)
    elif format == "jsonl":
        records = _parse_jsonl(source, collected)
    else:
        raise UnsupportedFormat(f"unknown corpus format: {format!r}")
    return records


def _parse_csv(source: BinaryIO, issues: list[MalformedRow]) -> list[PublicationRecord]:
    text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise MissingRequiredColumn("empty file: no header row") from None
    known = {name.lower(): name for name in CORPUS_COLUMNS}
    col_map: dict[int, str] = {}
    for idx, name in enumerate(header):
        canonical = known.get(name.strip().lower())
        if canonical is None:
            log.warning("ignoring unknown corpus column %r", name)
        else:
            col_map[idx] = canonical
    present = set(col_map.values())
    for required in REQUIRED_COLUMNS:
        if required not in present:
            raise MissingRequiredColumn(f"corpus.csv is missing column {required!r}")

    records: list[PublicationRecord] = []
    seen_ids: set[str] = set()
    n_rows = 0
    bad = 0
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        n_rows += 1
        cells = {name: (row[idx] if idx < len(row) else "") for idx, name in col_map.items()}
        try:
            record = _row_to_record(cells)
            if record.publication_id in seen_ids:
                raise ValueError(f"duplicate publication_id {record.publication_id!r}")
        except (ValueError, InvalidOperation) as exc:
            issues.append(MalformedRow(line=line_no, reason=str(exc)))
            bad += 1
            continue
        seen_ids.add(record.publication_id)
        records.append(record)
    if n_rows and bad > MAX_BAD_ROW_SHARE * n_rows:
        raise CorpusRejected(
            f"{bad} of {n_rows} rows are malformed (more than "
            f"{MAX_BAD_ROW_SHARE:.0%} tolerated)"
        )
    return records


def _parse_jsonl(source: BinaryIO, issues: list[MalformedRow]) -> list[PublicationRecord]:
    records: list[PublicationRecord] = []
    seen_ids: set[str] = set()
    n_rows = 0
    bad = 0
    for line_no, raw in enumerate(io.TextIOWrapper(source, encoding="utf-8"), start=1):
        if not raw.strip():
            continue
        n_rows += 1
        try:
            record = record_from_json(json.loads(raw))
            if record.publication_id in seen_ids:
                raise ValueError(f"duplicate publication_id {record.publication_id!r}")
        except (ValueError, KeyError, TypeError) as exc:
            issues.append(MalformedRow(line=line_no, reason=str(exc)))
            bad += 1
            continue
        seen_ids.add(record.publication_id)
        records.append(record)
    if n_rows and bad > MAX_BAD_ROW_SHARE * n_rows:
        raise CorpusRejected(
            f"{bad} of {n_rows} rows are malformed (more than "
            f"{MAX_BAD_ROW_SHARE:.0%} tolerated)"
        )
    return records


def _record_to_row(record: PublicationRecord) -> list[str]:
    authors = record.authors

    def joined(values: Iterable[str]) -> str:
        return LIST_SEP.join(values)

    def per_author(get) -> str:
        return joined((get(a) or "") for a in authors)

    def per_author_multi(get) -> str:
        return joined(INNER_SEP.join(get(a)) for a in authors)

    return [
        record.publication_id,
        record.doi or "",
        record.pmid or "",
        record.pmcid or "",
        record.title,
        record.abstract or "",
        record.acknowledgements or "",
        record.funding_statement or "",
        record.publisher,
        record.source_title,
        record.issn or "",
        str(record.pub_year),
        str(record.online_year) if record.online_year is not None else "",
        record.document_type.value,
        str(record.times_cited),
        joined(record.fields_of_research),
        joined(record.grant_ids),
        joined(sorted(record.corresponding_author_ids)),
        record.reviewer_affiliations or "",
        per_author(lambda a: a.raw_name),
        per_author(lambda a: a.source_researcher_id),
        per_author(lambda a: a.orcid),
        per_author_multi(lambda a: a.emails),
        per_author_multi(lambda a: a.affiliation_texts),
        per_author_multi(lambda a: a.org_registry_ids),
        per_author_multi(lambda a: a.countries),
        joined(f.name for f in record.funders),
        joined((f.registry_id or "") for f in record.funders),
        joined((f.country or "") for f in record.funders),
    ]


def serialize_corpus(records: Iterable[PublicationRecord], format: str = "csv") -> bytes:
    """Serialize records back to the documented export format.

    ``parse_corpus(serialize_corpus(records))`` is the identity on valid
    record lists.  Note the CSV form reserves ``;`` and ``|`` as list
    separators inside cells; values containing them only round-trip through
    the jsonl form.
    """
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(CORPUS_COLUMNS)
        for record in records:
            writer.writerow(_record_to_row(record))
        return buf.getvalue().encode("utf-8")
    if format == "jsonl":
        lines = [
            json.dumps(record_to_json(r), ensure_ascii=False, sort_keys=True)
            for r in records
        ]
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    raise UnsupportedFormat(f"unknown corpus format: {format!r}")


# ---------------------------------------------------------------------------
# grants.csv
# ---------------------------------------------------------------------------

GRANT_COLUMNS = (
    "grant_id",
    "funder_name",
    "funder_country",
    "start_year",
    "amount",
    "currency",
    "researcher_ids",
)


def parse_grants(source: Union[bytes, BinaryIO]) -> list[GrantRecord]:
    """Parse ``grants.csv`` (see docs/formats.md). Empty amount means unknown."""
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    reader = csv.DictReader(text)
    if reader.fieldnames is None:
        raise MissingRequiredColumn("empty grants file")
    fields = {name.strip().lower() for name in reader.fieldnames}
    for required in GRANT_COLUMNS:
        if required not in fields:
            raise MissingRequiredColumn(f"grants.csv is missing column {required!r}")
    grants = []
    for row in reader:
        row = {k.strip().lower(): (v or "") for k, v in row.items() if k}
        amount_cell = row["amount"].strip()
        grants.append(
            GrantRecord(
                grant_id=row["grant_id"].strip(),
                funder_name=row["funder_name"].strip(),
                funder_country=row["funder_country"].strip().upper(),
                start_year=int(row["start_year"].strip()),
                amount=Decimal(amount_cell) if amount_cell else None,
                currency=row["currency"].strip().upper(),
                researcher_ids=frozenset(_split(row["researcher_ids"])),
            )
        )
    return grants


def serialize_grants(grants: Iterable[GrantRecord]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(GRANT_COLUMNS)
    for g in grants:
        writer.writerow(
            [
                g.grant_id,
                g.funder_name,
                g.funder_country,
                str(g.start_year),
                str(g.amount) if g.amount is not None else "",
                g.currency,
                LIST_SEP.join(sorted(g.researcher_ids)),
            ]
        )
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Validation and simple reductions
# ---------------------------------------------------------------------------

YEAR_MIN, YEAR_MAX = 1900, 2100


def validate_record(record: PublicationRecord) -> list[ValidationIssue]:
    """Return every invariant violation; an empty list means the record is valid."""
    issues: list[ValidationIssue] = []
    if not record.publication_id.strip():
        issues.append(
            ValidationIssue("EmptyPublicationId", "publication_id", "blank identifier")
        )
    if not YEAR_MIN <= record.pub_year <= YEAR_MAX:
        issues.append(
            ValidationIssue(
                "YearOutOfRange",
                "pub_year",
                f"pub_year {record.pub_year} outside [{YEAR_MIN}, {YEAR_MAX}]",
            )
        )
    if record.online_year is not None and not YEAR_MIN <= record.online_year <= YEAR_MAX:
        issues.append(
            ValidationIssue(
                "YearOutOfRange",
                "online_year",
                f"online_year {record.online_year} outside [{YEAR_MIN}, {YEAR_MAX}]",
            )
        )
    if record.times_cited < 0:
        issues.append(
            ValidationIssue(
                "NegativeCitations",
                "times_cited",
                f"times_cited is {record.times_cited}",
            )
        )
    if not record.authors and record.document_type is not DocumentType.RETRACTION_NOTICE:
        issues.append(
            ValidationIssue("NoAuthors", "authors", "non-retraction record has no authors")
        )
    for pos, author in enumerate(record.authors):
        if not author.raw_name.strip():
            issues.append(
                ValidationIssue("EmptyAuthorName", "authors", f"author {pos} has no name")
            )
        for code in author.countries:
            if code not in ISO_COUNTRY_CODES:
                issues.append(
                    ValidationIssue(
                        "InvalidCountryCode",
                        "authors",
                        f"author {pos} has unknown country code {code!r}",
                    )
                )
    return issues


def per_year_counts(records: Iterable[PublicationRecord]) -> dict[int, int]:
    """Publications per publication year; years with no records are absent."""
    counts: dict[int, int] = {}
    for record in records:
        counts[record.pub_year] = counts.get(record.pub_year, 0) + 1
    return counts
