"""Inclusion/exclusion funnel for a parsed corpus.

A record is kept only if it survives, in order: retraction-notice check,
document-type allowlist, reviewer-only check, author-count cap.  The order
matters for reporting (a record violating several rules is counted once,
under the first rule that catches it).

The search phrase is matched case-insensitively as a substring of the
funding statement, the acknowledgements, and the author affiliation texts.
``ReviewerOnly`` means the phrase occurs in the reviewer affiliations and in
none of those body fields; records whose reviewer affiliations are unknown
(column absent or empty) are never classified ``ReviewerOnly``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .corpus import DocumentType, PublicationRecord

DEFAULT_PHRASE = "Pharmakon Neuroscience"
DEFAULT_MAX_AUTHORS = 25
DEFAULT_DOCUMENT_TYPES = frozenset(
    {
        DocumentType.RESEARCH_ARTICLE,
        DocumentType.REVIEW_ARTICLE,
        DocumentType.EDITORIAL,
        DocumentType.RESEARCH_CHAPTER,
    }
)


class RecordClass(enum.Enum):
    INCLUDED = "Included"
    RETRACTION_NOTICE = "RetractionNotice"
    DOC_TYPE_EXCLUDED = "DocTypeExcluded"
    REVIEWER_ONLY = "ReviewerOnly"
    TOO_MANY_AUTHORS = "TooManyAuthors"


@dataclass(frozen=True)
class ScreeningCriteria:
    phrase: str = DEFAULT_PHRASE
    allowed_document_types: frozenset[DocumentType] = DEFAULT_DOCUMENT_TYPES
    max_authors: int = DEFAULT_MAX_AUTHORS
    exclude_reviewer_only: bool = True

    def __post_init__(self):
        if not self.phrase:
            raise ValueError("screening phrase must be non-empty")
        if self.max_authors < 1:
            raise ValueError("max_authors must be at least 1")


@dataclass(frozen=True)
class ScreeningReport:
    input_count: int = 0
    retraction_notice_count: int = 0
    doc_type_excluded_count: int = 0
    reviewer_only_count: int = 0
    too_many_authors_count: int = 0
    included_count: int = 0

    def __post_init__(self):
        excluded = (
            self.retraction_notice_count
            + self.doc_type_excluded_count
            + self.reviewer_only_count
            + self.too_many_authors_count
        )
        if self.input_count != self.included_count + excluded:
            raise ValueError(
                f"report counts do not partition the input: {self.input_count} != "
                f"{self.included_count} included + {excluded} excluded"
            )

    def to_json(self) -> dict:
        return {
            "input_count": self.input_count,
            "retraction_notice_count": self.retraction_notice_count,
            "doc_type_excluded_count": self.doc_type_excluded_count,
            "reviewer_only_count": self.reviewer_only_count,
            "too_many_authors_count": self.too_many_authors_count,
            "included_count": self.included_count,
        }


def phrase_in_body(record: PublicationRecord, phrase: str) -> bool:
    """True if the phrase occurs in funding, acknowledgements, or affiliations."""
    needle = phrase.lower()
    for text in (record.funding_statement, record.acknowledgements):
        if text and needle in text.lower():
            return True
    for author in record.authors:
        for affiliation in author.affiliation_texts:
            if needle in affiliation.lower():
                return True
    return False


def classify_record(
    record: PublicationRecord, criteria: ScreeningCriteria
) -> RecordClass:
    """Assign exactly one screening class, applying rules in funnel order."""
    if record.document_type is DocumentType.RETRACTION_NOTICE:
        return RecordClass.RETRACTION_NOTICE
    if record.document_type not in criteria.allowed_document_types:
        return RecordClass.DOC_TYPE_EXCLUDED
    if criteria.exclude_reviewer_only and record.reviewer_affiliations:
        needle = criteria.phrase.lower()
        if needle in record.reviewer_affiliations.lower() and not phrase_in_body(
            record, criteria.phrase
        ):
            return RecordClass.REVIEWER_ONLY
    if len(record.authors) > criteria.max_authors:
        return RecordClass.TOO_MANY_AUTHORS
    return RecordClass.INCLUDED


def screen(
    records: list[PublicationRecord],
    criteria: ScreeningCriteria | None = None,
) -> tuple[list[PublicationRecord], ScreeningReport]:
    """Apply the funnel; returns surviving records (input order) and counts."""
    criteria = criteria or ScreeningCriteria()
    included: list[PublicationRecord] = []
    tallies = {cls: 0 for cls in RecordClass}
    for record in records:
        cls = classify_record(record, criteria)
        tallies[cls] += 1
        if cls is RecordClass.INCLUDED:
            included.append(record)
    report = ScreeningReport(
        input_count=len(records),
        retraction_notice_count=tallies[RecordClass.RETRACTION_NOTICE],
        doc_type_excluded_count=tallies[RecordClass.DOC_TYPE_EXCLUDED],
        reviewer_only_count=tallies[RecordClass.REVIEWER_ONLY],
        too_many_authors_count=tallies[RecordClass.TOO_MANY_AUTHORS],
        included_count=tallies[RecordClass.INCLUDED],
    )
    return included, report
