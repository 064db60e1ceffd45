"""Record-construction helpers shared by the test modules."""

from __future__ import annotations

from papertrail.corpus import AuthorMention, DocumentType, PublicationRecord

_COUNTER = 0


def make_author(name="Ada Example", source_id=None, **kw) -> AuthorMention:
    return AuthorMention(raw_name=name, source_researcher_id=source_id, **kw)


def make_record(publication_id=None, **kw) -> PublicationRecord:
    global _COUNTER
    if publication_id is None:
        _COUNTER += 1
        publication_id = f"t-{_COUNTER:04d}"
    defaults = dict(
        publication_id=publication_id,
        title="A study",
        publisher="Foxglove Science",
        source_title="Journal of Neuroscience A",
        pub_year=2020,
        document_type=DocumentType.RESEARCH_ARTICLE,
        times_cited=0,
        authors=(make_author(),),
    )
    defaults.update(kw)
    return PublicationRecord(**defaults)
