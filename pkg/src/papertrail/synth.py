"""Deterministic synthetic-corpus generator with planted ground truth.

The generator fabricates a full analysis input set - corpus, curated merge
map, career histories, grants, FX rates, and an org registry - with known
answers for every downstream stage:

* temporal archetypes: each author's career counts are drawn from a
  multinomial around a planted centroid (zero-centroid components stay
  exactly zero), so the clustering stage has labeled truth;
* screening decoys: retraction notices, off-type documents, reviewer-only
  mentions, and oversized author lists are planted in known numbers;
* identity decoys: duplicate researcher IDs with curated merges, authors
  without persistent identifiers, and dash/underscore email variants;
* funding plan: established grantees plus first-time post-window grantees
  drawn from a fixed agency table.

Everything is a pure function of (spec, seed); output files are written
with stable ordering so repeated runs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional

import numpy as np

from .composition import PeriodWindows
from .corpus import (
    AuthorMention,
    DocumentType,
    FunderMention,
    GrantRecord,
    PublicationRecord,
    serialize_corpus,
    serialize_grants,
)
from .errors import InvalidSpec
from .funding import RatesTable, serialize_rates
from .resolution import MergeEntry, MergeMap, serialize_merges, synthetic_source_id
from .trust import RegistryEntry, serialize_registry

FAKE_FUNDER_NAME = "Pharmakon Neuroscience Research Network"
FAKE_FUNDER_LOCATION = "Dhaka, Bangladesh"

_GIVEN_NAMES = (
    "Amara", "Bilal", "Chen", "Daria", "Emeka", "Farah", "Goran", "Hana",
    "Idris", "Jun", "Katya", "Liang", "Mateo", "Nadia", "Omar", "Priya",
    "Quentin", "Rosa", "Samir", "Tomas", "Uma", "Viktor", "Wei", "Ximena",
    "Yusuf", "Zofia", "Anders", "Beatriz", "Cyril", "Deniz",
)

_FAMILY_NAMES = (
    "Abadi", "Bakker", "Castro", "Dimitrov", "Eriksen", "Fontaine", "Ghosh",
    "Haddad", "Ivanova", "Jaworski", "Kimura", "Lindqvist", "Moreau",
    "Novak", "Okafor", "Pereira", "Qureshi", "Rahman", "Svensson", "Tanaka",
    "Ueda", "Varga", "Wallace", "Xu", "Yilmaz", "Zhang", "Almeida",
    "Bergstrom", "Costa", "Duran",
)

_ORG_STEMS = (
    "Meridian", "Harbour", "Alpine", "Lakeside", "Summit", "Riverton",
    "Crescent", "Atlas", "Beacon", "Cobalt", "Juniper", "Larkspur",
    "Northgate", "Orchard", "Pinnacle", "Quarry", "Redwood", "Sterling",
    "Tidewater", "Vantage",
)

_TITLE_TOPICS = (
    "tau phosphorylation", "synaptic plasticity", "microglial activation",
    "oxidative stress", "neuroinflammation", "amyloid clearance",
    "dopaminergic signalling", "blood-brain barrier transport",
    "mitochondrial dynamics", "autophagy regulation", "gut-brain signalling",
    "cholinergic deficits",
)

_TITLE_CONTEXTS = (
    "in early neurodegeneration", "after ischemic injury",
    "in cognitive decline", "under chronic stress", "in ageing models",
    "following traumatic insult", "in motor disorders",
    "across disease stages",
)

#: 40 author countries (ISO 3166-1 alpha-2), six continents.
DEFAULT_COUNTRIES = (
    "BD", "CN", "IN", "PK", "IR", "IQ", "SA", "TR", "EG", "MA",
    "NG", "ZA", "KE", "ET", "BR", "AR", "MX", "CO", "CL", "PE",
    "US", "CA", "GB", "DE", "FR", "IT", "ES", "PT", "NL", "PL",
    "RO", "GR", "HR", "RU", "UA", "JP", "KR", "MY", "ID", "AU",
)

_PUBLISHER_POOL = (
    ("Aldgate Scientific", 8),
    ("Borealis Press", 6),
    ("Cormorant Publishing", 5),
    ("Delphic Journals", 5),
    ("Eastgate Academic", 4),
    ("Foxglove Science", 5),
    ("Greyline Press", 4),
    ("Holloway & Marsh", 4),
    ("Ionian Publishing", 4),
    ("Kestrel Open Research", 4),
    ("Lanternworks", 4),
    ("Mistral Editions", 3),
)

_JOURNAL_STEMS = (
    "Neuroscience", "Neurochemistry", "Neuropharmacology", "Brain Research",
    "Molecular Psychiatry", "Neural Plasticity", "Cognitive Science",
    "Neurobiology", "Translational Medicine", "Biomedical Science",
)

#: Post-window agencies for first-time grantees (name, country, currency).
NEW_GRANTEE_AGENCIES = (
    ("National Natural Science Foundation of China", "CN", "CNY"),
    ("Agence Nationale de la Recherche", "FR", "EUR"),
    ("Croatian Science Foundation", "HR", "EUR"),
    ("Science Foundation Ireland", "IE", "EUR"),
    ("Sapienza University of Rome", "IT", "EUR"),
    ("Fundacao para a Ciencia e a Tecnologia", "PT", "EUR"),
    ("Russian Science Foundation", "RU", "RUB"),
)

#: Agencies for researchers already funded before the window.
ESTABLISHED_AGENCIES = (
    ("National Institute of Brain Studies", "US", "USD"),
    ("Federal Science Endowment", "US", "USD"),
    ("Deutsche Forschungsallianz", "DE", "EUR"),
    ("United Kingdom Research Trust", "GB", "GBP"),
    ("Japan Society for Research Promotion", "JP", "JPY"),
    ("Swiss National Research Fund", "CH", "CHF"),
    ("Australian Health Research Council", "AU", "AUD"),
)

DEFAULT_RATES = {
    "USD": Decimal("1"),
    "EUR": Decimal("0.92"),
    "GBP": Decimal("0.79"),
    "CNY": Decimal("7.25"),
    "JPY": Decimal("155"),
    "CHF": Decimal("0.88"),
    "RUB": Decimal("92"),
    "AUD": Decimal("1.52"),
}


@dataclass(frozen=True)
class ArchetypeSpec:
    """A planted temporal archetype: centroid, author count, count noise.

    ``min_nonzero_share`` rejects multinomial draws whose active components
    fall below that share of the total, keeping authors with structurally
    nonzero periods clearly off the zero-replacement manifold (so recovered
    zero cells stay exact zeros).  Zero-centroid components always draw 0.
    """

    name: str
    centroid: tuple[float, float, float]
    author_count: int
    pubs_range: tuple[int, int]  # total career publications, uniform inclusive
    min_nonzero_share: float = 0.10
    max_share_deviation: float = 0.10  # reject draws straying further from centroid

    def validate(self) -> None:
        if self.author_count < 1:
            raise InvalidSpec(f"archetype {self.name}: author_count must be >= 1")
        if any(c < 0 for c in self.centroid) or abs(sum(self.centroid) - 1.0) > 1e-9:
            raise InvalidSpec(f"archetype {self.name}: centroid must be a composition")
        if self.centroid[1] <= 0:
            raise InvalidSpec(
                f"archetype {self.name}: corpus authors need in-window activity"
            )
        lo, hi = self.pubs_range
        if not 1 <= lo <= hi:
            raise InvalidSpec(f"archetype {self.name}: bad pubs_range {self.pubs_range}")
        active = [c for c in self.centroid if c > 0]
        if not 0 <= self.min_nonzero_share < min(active):
            raise InvalidSpec(
                f"archetype {self.name}: min_nonzero_share must sit below the "
                "smallest active centroid component"
            )


@dataclass(frozen=True)
class DecoySpec:
    retraction_notices: int = 2
    doc_type_excluded: int = 12
    reviewer_only: int = 4
    oversized_author_counts: tuple[int, ...] = (161, 63)


DEFAULT_ARCHETYPES = (
    ArchetypeSpec("sustained", (0.218, 0.497, 0.285), 202, (40, 80)),
    ArchetypeSpec("onset-during", (0.0, 0.630, 0.370), 68, (20, 40)),
    ArchetypeSpec("window-only", (0.0, 1.0, 0.0), 24, (10, 16)),
    ArchetypeSpec("ceased-after", (0.431, 0.569, 0.0), 18, (20, 40)),
)


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 42
    archetypes: tuple[ArchetypeSpec, ...] = DEFAULT_ARCHETYPES
    included_papers: int = 120
    authors_per_paper: tuple[int, int] = (3, 9)
    decoys: DecoySpec = DecoySpec()
    merge_pairs: int = 7
    no_identifier_authors: int = 29
    email_variant_authors: int = 3
    multi_country_authors: int = 2
    countries: tuple[str, ...] = DEFAULT_COUNTRIES
    windows: PeriodWindows = PeriodWindows()
    funded_researchers: int = 30
    new_grantee_count: int = 9
    fake_funder_name: str = FAKE_FUNDER_NAME
    fake_funder_location: str = FAKE_FUNDER_LOCATION

    @property
    def author_count(self) -> int:
        return sum(a.author_count for a in self.archetypes)

    def validate(self) -> None:
        if not self.archetypes:
            raise InvalidSpec("at least one archetype is required")
        for archetype in self.archetypes:
            archetype.validate()
        lo, hi = self.authors_per_paper
        if not 1 <= lo <= hi:
            raise InvalidSpec(f"bad authors_per_paper range {self.authors_per_paper}")
        if self.included_papers < 1:
            raise InvalidSpec("included_papers must be >= 1")
        if self.included_papers * hi < self.author_count:
            raise InvalidSpec(
                "not enough author slots: "
                f"{self.included_papers} papers x {hi} max authors "
                f"< {self.author_count} authors"
            )
        n = self.author_count
        for count, label in (
            (self.no_identifier_authors, "no_identifier_authors"),
            (self.merge_pairs, "merge_pairs"),
            (self.email_variant_authors, "email_variant_authors"),
        ):
            if count < 0:
                raise InvalidSpec(f"{label} must be >= 0")
        if self.no_identifier_authors + self.merge_pairs + self.email_variant_authors > n:
            raise InvalidSpec("identity decoys exceed the author count")
        if self.new_grantee_count > self.funded_researchers:
            raise InvalidSpec("new grantees cannot exceed funded researchers")
        if self.funded_researchers > n:
            raise InvalidSpec("funded researchers exceed the author count")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        archetypes = tuple(
            ArchetypeSpec(
                name=a["name"],
                centroid=tuple(a["centroid"]),
                author_count=int(a["authors"]),
                pubs_range=tuple(a.get("pubs", (10, 35))),
            )
            for a in data.get("archetype", ())
        ) or DEFAULT_ARCHETYPES
        decoys_data = data.get("decoys", {})
        decoys = DecoySpec(
            retraction_notices=int(decoys_data.get("retraction_notices", 2)),
            doc_type_excluded=int(decoys_data.get("doc_type_excluded", 12)),
            reviewer_only=int(decoys_data.get("reviewer_only", 4)),
            oversized_author_counts=tuple(
                decoys_data.get("oversized_author_counts", (161, 63))
            ),
        )
        windows = (
            PeriodWindows.parse(data["windows"]) if "windows" in data else PeriodWindows()
        )
        return cls(
            seed=int(data.get("seed", 42)),
            archetypes=archetypes,
            included_papers=int(data.get("included_papers", 120)),
            authors_per_paper=tuple(data.get("authors_per_paper", (3, 9))),
            decoys=decoys,
            merge_pairs=int(data.get("merge_pairs", 7)),
            no_identifier_authors=int(data.get("no_identifier_authors", 29)),
            email_variant_authors=int(data.get("email_variant_authors", 3)),
            multi_country_authors=int(data.get("multi_country_authors", 2)),
            countries=tuple(data.get("countries", DEFAULT_COUNTRIES)),
            windows=windows,
            funded_researchers=int(data.get("funded_researchers", 30)),
            new_grantee_count=int(data.get("new_grantees", 9)),
        )


@dataclass
class _Author:
    index: int
    name: str
    archetype: str
    country: str
    countries: tuple[str, ...]
    org_name: str
    org_id: str
    affiliation: str
    source_ids: tuple[str, ...]  # empty for no-identifier authors
    email_pair: Optional[tuple[str, str]] = None  # dash/underscore variants
    anomalous_emails: tuple[str, ...] = ()  # two variants in one mention
    counts: tuple[int, int, int] = (0, 0, 0)

    @property
    def profile_id(self) -> str:
        if not self.source_ids:
            return synthetic_source_id(self.name, self.affiliation)
        if len(self.source_ids) > 1:
            return f"prof-m{self.index:03d}"
        return self.source_ids[0]

    def mention_id(self, which: int) -> Optional[str]:
        if not self.source_ids:
            return None
        return self.source_ids[which % len(self.source_ids)]


@dataclass(frozen=True, eq=False)
class SynthResult:
    records: list[PublicationRecord]
    grants: list[GrantRecord]
    rates: RatesTable
    registry: list[RegistryEntry]
    merge_map: MergeMap
    careers: dict[str, dict[int, int]]
    truth: dict


def _draw_counts(rng, archetype: ArchetypeSpec, minimum_during: int) -> tuple[int, int, int]:
    """Multinomial career counts around the centroid; zero parts stay zero."""
    centroid = np.asarray(archetype.centroid)
    active = np.nonzero(centroid > 0)[0]
    probs = centroid[active] / centroid[active].sum()
    lo, hi = archetype.pubs_range
    counts = [0, minimum_during, 0]
    for _ in range(200):
        total = int(rng.integers(lo, hi + 1))
        if total < minimum_during:
            continue
        draw = rng.multinomial(total, probs)
        if np.any(draw < archetype.min_nonzero_share * total):
            continue
        if np.any(np.abs(draw / total - probs) > archetype.max_share_deviation):
            continue
        counts = [0, 0, 0]
        for pos, idx in enumerate(active):
            counts[idx] = int(draw[pos])
        if counts[1] >= minimum_during:
            return tuple(counts)
    # Rejection essentially never fails; shift weight into the window if it does.
    counts[1] = max(counts[1], minimum_during)
    return tuple(counts)


def _spread_years(rng, total: int, years: list[int]) -> dict[int, int]:
    if total == 0:
        return {}
    draw = rng.multinomial(total, [1.0 / len(years)] * len(years))
    return {year: int(c) for year, c in zip(years, draw) if c}


def generate_corpus(spec: Optional[SynthSpec] = None) -> SynthResult:
    """Generate the full planted dataset; bit-identical for a given spec."""
    spec = spec or SynthSpec()
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    windows = spec.windows
    before_years = list(range(windows.before_end - 3, windows.before_end + 1))
    during_years = list(range(windows.during_start, windows.during_end + 1))
    after_years = list(
        range(windows.after_start, windows.after_start + 3)
        if windows.after_end is None
        else range(windows.after_start, windows.after_end + 1)
    )

    # --- author identities -------------------------------------------------
    n_authors = spec.author_count
    if n_authors > len(_GIVEN_NAMES) * len(_FAMILY_NAMES):
        raise InvalidSpec(f"name pool supports at most "
                          f"{len(_GIVEN_NAMES) * len(_FAMILY_NAMES)} authors")
    name_indices = rng.permutation(len(_GIVEN_NAMES) * len(_FAMILY_NAMES))[:n_authors]
    names = [
        f"{_GIVEN_NAMES[i % len(_GIVEN_NAMES)]} {_FAMILY_NAMES[i // len(_GIVEN_NAMES)]}"
        for i in name_indices
    ]
    org_names = [
        f"{stem} {kind}"
        for stem in _ORG_STEMS
        for kind in ("University", "Institute of Neuroscience", "Medical College",
                     "Research Centre", "Polytechnic", "Clinical Foundation",
                     "Academy of Sciences", "Health Sciences University",
                     "Institute of Biology", "School of Pharmacy")
    ]

    authors: list[_Author] = []
    archetype_of: list[str] = []
    for archetype in spec.archetypes:
        archetype_of.extend([archetype.name] * archetype.author_count)

    # Special roles: disjoint index blocks keep the bookkeeping simple and
    # deterministic; the archetype labels above are independent of them.
    merge_idx = set(range(spec.merge_pairs))
    email_anom_idx = set(
        range(spec.merge_pairs, spec.merge_pairs + spec.email_variant_authors)
    )
    noid_start = spec.merge_pairs + spec.email_variant_authors
    noid_idx = set(range(noid_start, noid_start + spec.no_identifier_authors))
    multi_idx = set(
        range(
            noid_start + spec.no_identifier_authors,
            noid_start + spec.no_identifier_authors + spec.multi_country_authors,
        )
    )

    next_source = 1
    for i in range(n_authors):
        country = spec.countries[i % len(spec.countries)]
        countries = (country,)
        if i in multi_idx:
            other = spec.countries[(i + 7) % len(spec.countries)]
            countries = (country, other)
        org_pos = int(rng.integers(0, len(org_names)))
        org_name = org_names[org_pos]
        org_id = f"org-{org_pos:04d}"
        affiliation = f"{org_name}, {country}"
        if i in noid_idx:
            source_ids: tuple[str, ...] = ()
        elif i in merge_idx:
            source_ids = (f"R-{next_source:04d}", f"R-{next_source + 1:04d}")
            next_source += 2
        else:
            source_ids = (f"R-{next_source:04d}",)
            next_source += 1
        email_pair = None
        anomalous: tuple[str, ...] = ()
        given, family = names[i].lower().split(" ", 1)
        if i in merge_idx and i % 2 == 0:
            email_pair = (
                f"{given}-{family}@mail.example",
                f"{given}_{family}@mail.example",
            )
        if i in email_anom_idx:
            anomalous = (
                f"{given}-{family}@post.example",
                f"{given}_{family}@post.example",
            )
        authors.append(
            _Author(
                index=i,
                name=names[i],
                archetype=archetype_of[i],
                country=country,
                countries=countries,
                org_name=org_name,
                org_id=org_id,
                affiliation=affiliation,
                source_ids=source_ids,
                email_pair=email_pair,
                anomalous_emails=anomalous,
            )
        )

    # --- planted career counts --------------------------------------------
    spec_by_name = {s.name: s for s in spec.archetypes}
    for author in authors:
        minimum = 2 if author.index in merge_idx else 1
        author.counts = _draw_counts(rng, spec_by_name[author.archetype], minimum)

    # --- author-to-paper assignment ----------------------------------------
    lo, hi = spec.authors_per_paper
    sizes = [int(s) for s in rng.integers(lo, hi + 1, size=spec.included_papers)]
    total_slots = sum(sizes)
    if total_slots < n_authors:
        raise InvalidSpec("paper sizes drew too few author slots; widen the range")
    slots = {a.index: (2 if a.index in merge_idx else 1) for a in authors}
    capacity = {a.index: a.counts[1] for a in authors}
    remaining = total_slots - sum(slots.values())
    open_authors = [i for i in range(n_authors) if slots[i] < capacity[i]]
    while remaining > 0 and open_authors:
        pick = int(rng.integers(0, len(open_authors)))
        idx = open_authors[pick]
        slots[idx] += 1
        remaining -= 1
        if slots[idx] >= capacity[idx]:
            open_authors.pop(pick)
    if remaining > 0:
        raise InvalidSpec("authors lack in-window capacity for the requested papers")

    pool = [i for i in range(n_authors) for _ in range(slots[i])]
    pool = [pool[j] for j in rng.permutation(len(pool))]
    papers_authors: list[list[int]] = []
    position = 0
    for size in sizes:
        chosen: list[int] = []
        seen: set[int] = set()
        cursor = position
        while len(chosen) < size:
            if cursor < len(pool) and pool[cursor] in seen:
                probe = cursor + 1
                while probe < len(pool) and pool[probe] in seen:
                    probe += 1
                if probe < len(pool):
                    pool[cursor], pool[probe] = pool[probe], pool[cursor]
                else:
                    # Tail is all duplicates: substitute any unused author.
                    for candidate in range(n_authors):
                        if candidate not in seen:
                            pool[cursor] = candidate
                            break
            if cursor < len(pool):
                chosen.append(pool[cursor])
                seen.add(pool[cursor])
                cursor += 1
            else:
                for candidate in range(n_authors):
                    if candidate not in seen:
                        chosen.append(candidate)
                        seen.add(candidate)
                        break
        position = cursor
        papers_authors.append(chosen)

    mention_counter = {i: 0 for i in range(n_authors)}
    papers_on = {i: [] for i in range(n_authors)}
    for paper_idx, members in enumerate(papers_authors):
        for idx in members:
            mention_counter[idx] += 1
            papers_on[idx].append(paper_idx)

    # Every merged author must surface both source IDs; force a second paper
    # for any that ended up with a single mention.
    for idx in sorted(merge_idx):
        if mention_counter[idx] >= 2:
            continue
        for paper_idx, members in enumerate(papers_authors):
            if idx not in members and len(members) < hi:
                members.append(idx)
                mention_counter[idx] += 1
                papers_on[idx].append(paper_idx)
                break

    # --- included papers ----------------------------------------------------
    journals = []
    publishers = []
    for publisher, n_journals in _PUBLISHER_POOL:
        for j in range(n_journals):
            stem = _JOURNAL_STEMS[(len(journals) + j) % len(_JOURNAL_STEMS)]
            journals.append(f"Journal of {stem} {chr(ord('A') + j)}")
            publishers.append(publisher)
    if len(during_years) == 4:
        year_weights = [0.18, 0.3, 0.32, 0.2]
    else:
        year_weights = [1.0 / len(during_years)] * len(during_years)
    year_choices = rng.choice(during_years, size=spec.included_papers, p=year_weights)
    journal_choices = rng.integers(0, len(journals), size=spec.included_papers)
    statement_mode = rng.random(spec.included_papers)
    citations = np.minimum(
        rng.poisson(45, size=spec.included_papers)
        + rng.integers(0, 60, size=spec.included_papers),
        420,
    )

    included_records: list[tuple[str, dict]] = []
    funded_plan = _plan_grants(spec, authors, rng)
    grants_by_author: dict[int, list[GrantRecord]] = funded_plan["by_author"]

    for paper_idx in range(spec.included_papers):
        members = papers_authors[paper_idx]
        mentions = []
        for idx in members:
            author = authors[idx]
            which = papers_on[idx].index(paper_idx)
            emails: tuple[str, ...] = ()
            if author.email_pair is not None:
                emails = (author.email_pair[which % 2],)
            elif author.anomalous_emails and which == 0:
                emails = author.anomalous_emails
            affiliations = [author.affiliation]
            mentions.append(
                AuthorMention(
                    raw_name=author.name,
                    source_researcher_id=author.mention_id(which),
                    emails=emails,
                    affiliation_texts=tuple(affiliations),
                    org_registry_ids=(author.org_id,),
                    countries=author.countries,
                )
            )
        first = authors[members[0]]
        mode = statement_mode[paper_idx]
        funding_statement = None
        acknowledgements = None
        legit = None
        for idx in members:
            if grants_by_author.get(idx):
                legit = grants_by_author[idx][0]
                break
        if mode < 0.70:
            statement = (
                f"This work was supported by the {spec.fake_funder_name}, "
                f"{spec.fake_funder_location}."
            )
            if legit is not None and mode < 0.35:
                statement = (
                    f"The authors concede the support by the {spec.fake_funder_name}, "
                    f"{spec.fake_funder_location}. This research was also funded by "
                    f"the {legit.funder_name} (grant {legit.grant_id})."
                )
            funding_statement = statement
        elif mode < 0.90:
            acknowledgements = (
                f"We thank our colleagues at the {spec.fake_funder_name} for "
                "valuable discussions."
            )
        else:
            target = next(
                (m for m in mentions if m.source_researcher_id), mentions[0]
            )
            pos = mentions.index(target)
            mentions[pos] = AuthorMention(
                raw_name=target.raw_name,
                source_researcher_id=target.source_researcher_id,
                orcid=target.orcid,
                emails=target.emails,
                affiliation_texts=target.affiliation_texts
                + (f"{spec.fake_funder_name}, {spec.fake_funder_location}",),
                org_registry_ids=target.org_registry_ids,
                countries=target.countries,
            )
        topic = _TITLE_TOPICS[paper_idx % len(_TITLE_TOPICS)]
        context = _TITLE_CONTEXTS[(paper_idx * 5) % len(_TITLE_CONTEXTS)]
        journal_idx = int(journal_choices[paper_idx])
        grant_ids = tuple(
            g.grant_id for idx in members for g in grants_by_author.get(idx, ())[:1]
        )[:2]
        funders = ()
        if funding_statement and legit is not None and mode < 0.35:
            funders = (
                FunderMention(name=spec.fake_funder_name),
                FunderMention(
                    name=legit.funder_name,
                    registry_id=funded_plan["registry_id_of"].get(legit.funder_name),
                    country=legit.funder_country,
                ),
            )
        payload = {
            "title": f"Role of {topic} {context}",
            "pub_year": int(year_choices[paper_idx]),
            "document_type": (
                DocumentType.RESEARCH_CHAPTER
                if paper_idx < 3
                else (
                    DocumentType.REVIEW_ARTICLE
                    if paper_idx % 4 == 1
                    else DocumentType.RESEARCH_ARTICLE
                )
            ),
            "publisher": publishers[journal_idx],
            "source_title": (
                "Advances in Translational Neuroscience (book)"
                if paper_idx < 3
                else journals[journal_idx]
            ),
            "times_cited": int(citations[paper_idx]),
            "authors": tuple(mentions),
            "funding_statement": funding_statement,
            "acknowledgements": acknowledgements,
            "corresponding_author_ids": frozenset(
                i for i in (first.mention_id(papers_on[first.index].index(paper_idx)),)
                if i
            ),
            "grant_ids": grant_ids,
            "funders": funders,
            "fields_of_research": ("32 Biomedical and Clinical Sciences",),
        }
        included_records.append(("included", payload))

    # --- decoys --------------------------------------------------------------
    decoy_records: list[tuple[str, dict]] = []
    core = authors[: max(3, min(8, n_authors))]

    def decoy_mentions(count: int = 3) -> tuple[AuthorMention, ...]:
        count = min(count, len(core))
        picks = [core[int(q)] for q in rng.permutation(len(core))[:count]]
        return tuple(
            AuthorMention(
                raw_name=a.name,
                source_researcher_id=a.source_ids[0] if a.source_ids else None,
                affiliation_texts=(a.affiliation,),
                org_registry_ids=(a.org_id,),
                countries=a.countries,
            )
            for a in picks
        )

    for r in range(spec.decoys.retraction_notices):
        decoy_records.append(
            (
                "retraction",
                {
                    "title": f"Retraction note: {_TITLE_TOPICS[r]} revisited",
                    "pub_year": int(rng.choice(during_years)),
                    "document_type": DocumentType.RETRACTION_NOTICE,
                    "publisher": publishers[r % len(publishers)],
                    "source_title": journals[r % len(journals)],
                    "times_cited": int(rng.integers(0, 4)),
                    "authors": decoy_mentions(2),
                    "funding_statement": (
                        f"This work was supported by the {spec.fake_funder_name}, "
                        f"{spec.fake_funder_location}."
                    ),
                },
            )
        )
    for d in range(spec.decoys.doc_type_excluded):
        decoy_records.append(
            (
                "doc_type",
                {
                    "title": f"Conference abstracts on {_TITLE_TOPICS[d % len(_TITLE_TOPICS)]}",
                    "pub_year": int(rng.choice(during_years)),
                    "document_type": DocumentType.OTHER,
                    "publisher": publishers[d % len(publishers)],
                    "source_title": journals[(d * 3) % len(journals)],
                    "times_cited": int(rng.integers(0, 15)),
                    "authors": decoy_mentions(3),
                    "acknowledgements": (
                        f"Collected abstracts acknowledging the {spec.fake_funder_name}."
                    ),
                },
            )
        )
    for v in range(spec.decoys.reviewer_only):
        decoy_records.append(
            (
                "reviewer_only",
                {
                    "title": f"Peer-reviewed findings on {_TITLE_TOPICS[(v * 2) % len(_TITLE_TOPICS)]}",
                    "pub_year": int(rng.choice(during_years)),
                    "document_type": DocumentType.RESEARCH_ARTICLE,
                    "publisher": publishers[(v + 3) % len(publishers)],
                    "source_title": journals[(v * 7) % len(journals)],
                    "times_cited": int(rng.integers(5, 80)),
                    "authors": decoy_mentions(4),
                    "reviewer_affiliations": (
                        f"Reviewer 2: {spec.fake_funder_name}, "
                        f"{spec.fake_funder_location}"
                    ),
                },
            )
        )
    for o, oversized in enumerate(spec.decoys.oversized_author_counts):
        filler = tuple(
            AuthorMention(
                raw_name=f"Consortium Member {o + 1}-{m + 1:03d}",
                source_researcher_id=f"X-{o + 1:01d}{m + 1:04d}",
                affiliation_texts=(f"Consortium Site {m % 17 + 1}",),
                countries=(spec.countries[m % len(spec.countries)],),
            )
            for m in range(oversized)
        )
        decoy_records.append(
            (
                "oversized",
                {
                    "title": f"Multi-site consortium report {o + 1}",
                    "pub_year": int(rng.choice(during_years)),
                    "document_type": DocumentType.RESEARCH_ARTICLE,
                    "publisher": publishers[(o + 5) % len(publishers)],
                    "source_title": journals[(o + 11) % len(journals)],
                    "times_cited": int(rng.integers(10, 120)),
                    "authors": filler,
                    "funding_statement": (
                        f"This work was supported by the {spec.fake_funder_name}, "
                        f"{spec.fake_funder_location}."
                    ),
                },
            )
        )

    # --- interleave, assign IDs, build records -------------------------------
    all_payloads = included_records + decoy_records
    order = rng.permutation(len(all_payloads))
    records: list[PublicationRecord] = []
    truth_decoys: dict[str, list[str]] = {
        "retraction": [],
        "doc_type": [],
        "reviewer_only": [],
        "oversized": [],
        "included": [],
    }
    for row, original in enumerate(order):
        kind, payload = all_payloads[int(original)]
        pub_id = f"pub-{row + 1:04d}"
        truth_decoys[kind].append(pub_id)
        records.append(
            PublicationRecord(
                publication_id=pub_id,
                doi=f"10.5555/synth.{row + 1:04d}",
                title=payload["title"],
                publisher=payload["publisher"],
                source_title=payload["source_title"],
                pub_year=payload["pub_year"],
                document_type=payload["document_type"],
                times_cited=payload["times_cited"],
                authors=payload["authors"],
                abstract=None,
                acknowledgements=payload.get("acknowledgements"),
                funding_statement=payload.get("funding_statement"),
                issn=None,
                corresponding_author_ids=payload.get(
                    "corresponding_author_ids", frozenset()
                ),
                funders=payload.get("funders", ()),
                grant_ids=payload.get("grant_ids", ()),
                fields_of_research=payload.get("fields_of_research", ()),
                reviewer_affiliations=payload.get("reviewer_affiliations"),
            )
        )

    # --- careers: planted counts minus corpus attributions -------------------
    careers: dict[str, dict[int, int]] = {}
    for author in authors:
        n_before, n_during, n_after = author.counts
        corpus_years: dict[int, int] = {}
        for paper_idx in papers_on[author.index]:
            year = included_records[paper_idx][1]["pub_year"]
            corpus_years[year] = corpus_years.get(year, 0) + 1
        corpus_total = sum(corpus_years.values())
        if corpus_total > n_during:
            # A repair path handed this author more window papers than
            # planted; record the truth as what actually happened.
            n_during = corpus_total
            author.counts = (n_before, n_during, n_after)
        leftover_during = n_during - corpus_total
        per_year: dict[int, int] = {}
        per_year.update(_spread_years(rng, n_before, before_years))
        per_year.update(_spread_years(rng, leftover_during, during_years))
        per_year.update(_spread_years(rng, n_after, after_years))
        if per_year:
            careers[author.profile_id] = dict(sorted(per_year.items()))

    # --- merge map ------------------------------------------------------------
    merge_entries = tuple(
        MergeEntry(
            source_ids=frozenset(authors[i].source_ids),
            canonical_name=authors[i].name,
            profile_key=authors[i].profile_id,
        )
        for i in sorted(merge_idx)
    )
    merge_map = MergeMap(entries=merge_entries, provenance="Curated")

    # --- registry ---------------------------------------------------------------
    registry = list(funded_plan["registry"])
    for pos, org_name in enumerate(org_names):
        registry.append(
            RegistryEntry(
                registry_id=f"org-{pos:04d}",
                canonical_name=org_name,
                aliases=(),
                country=None,
            )
        )

    truth = {
        "seed": spec.seed,
        "archetypes": {a.profile_id: a.archetype for a in authors},
        "planted_counts": {a.profile_id: list(a.counts) for a in authors},
        "decoys": truth_decoys,
        "merge_pairs": [
            sorted(authors[i].source_ids) for i in sorted(merge_idx)
        ],
        "no_identifier_profiles": sorted(
            authors[i].profile_id for i in sorted(noid_idx)
        ),
        "email_anomaly_profiles": sorted(
            authors[i].profile_id for i in sorted(email_anom_idx)
        ),
        "funded_profiles": funded_plan["funded_profiles"],
        "new_grantee_profiles": funded_plan["new_grantee_profiles"],
        "fake_funder": spec.fake_funder_name,
        "archetype_sizes": {
            s.name: s.author_count for s in spec.archetypes
        },
    }
    return SynthResult(
        records=records,
        grants=funded_plan["grants"],
        rates=RatesTable(rates=dict(DEFAULT_RATES), as_of="2025-06-30"),
        registry=registry,
        merge_map=merge_map,
        careers=careers,
        truth=truth,
    )


def _plan_grants(spec: SynthSpec, authors: list[_Author], rng) -> dict:
    """Grant plan: established grantees plus post-window first-timers."""
    n = len(authors)
    eligible = [a for a in authors if a.source_ids]
    picks = [eligible[int(j)] for j in rng.permutation(len(eligible))[: spec.funded_researchers]]
    new_grantees = picks[: spec.new_grantee_count]
    established = picks[spec.new_grantee_count :]

    grants: list[GrantRecord] = []
    by_author: dict[int, list[GrantRecord]] = {}
    registry_entries: list[RegistryEntry] = []
    registry_id_of: dict[str, str] = {}

    def add_registry(name: str, country: str, aliases: tuple[str, ...] = ()):
        if name in registry_id_of:
            return registry_id_of[name]
        registry_id = f"fund-{len(registry_id_of) + 1:03d}"
        registry_id_of[name] = registry_id
        registry_entries.append(
            RegistryEntry(
                registry_id=registry_id,
                canonical_name=name,
                aliases=aliases,
                country=country,
            )
        )
        return registry_id

    alias_table = {
        "National Natural Science Foundation of China": ("NSFC",),
        "Fundacao para a Ciencia e a Tecnologia": ("FCT",),
        "Science Foundation Ireland": ("SFI",),
    }
    for name, country, _currency in NEW_GRANTEE_AGENCIES + ESTABLISHED_AGENCIES:
        add_registry(name, country, alias_table.get(name, ()))

    grant_no = 1

    def add_grant(author: _Author, agency, start_year: int, usd_target: int,
                  extra_ids: tuple[str, ...] = (), missing_amount: bool = False):
        nonlocal grant_no
        name, country, currency = agency
        rate = DEFAULT_RATES[currency]
        amount = None if missing_amount else (Decimal(usd_target) * rate).quantize(
            Decimal("0.01")
        )
        grant = GrantRecord(
            grant_id=f"G-{grant_no:04d}",
            funder_name=name,
            funder_country=country,
            start_year=start_year,
            amount=amount,
            currency=currency,
            researcher_ids=frozenset((author.source_ids[0],) + extra_ids),
        )
        grant_no += 1
        grants.append(grant)
        by_author.setdefault(author.index, []).append(grant)
        return grant

    # First-time grantees: nothing before the window, one or two grants in or
    # after it, drawn round-robin from the post-window agency table.
    for pos, author in enumerate(new_grantees):
        agency = NEW_GRANTEE_AGENCIES[pos % len(NEW_GRANTEE_AGENCIES)]
        start = int(rng.choice([2019, 2020, 2021, 2022, 2023, 2024, 2025]))
        add_grant(author, agency, start, usd_target=int(rng.integers(350_000, 700_000)))
        if pos % 3 == 0:
            follow_up = NEW_GRANTEE_AGENCIES[(pos + 3) % len(NEW_GRANTEE_AGENCIES)]
            add_grant(
                author, follow_up, int(rng.choice([2023, 2024, 2025])),
                usd_target=int(rng.integers(150_000, 400_000)),
            )

    # Established grantees: at least one pre-window grant each, occasionally
    # large programme grants; one collaborative grant names four researchers.
    for pos, author in enumerate(established):
        agency = ESTABLISHED_AGENCIES[pos % len(ESTABLISHED_AGENCIES)]
        start = int(rng.integers(2009, 2019))
        usd_target = int(rng.integers(2_500_000, 9_000_000))
        add_grant(author, agency, start, usd_target)
        if pos % 4 == 0:
            later_agency = ESTABLISHED_AGENCIES[(pos + 2) % len(ESTABLISHED_AGENCIES)]
            add_grant(
                author, later_agency, int(rng.integers(2019, 2026)),
                usd_target=int(rng.integers(1_000_000, 5_000_000)),
            )
    if established:
        shared_ids = tuple(
            a.source_ids[0] for a in established[1:4] if a.source_ids
        )
        add_grant(
            established[0],
            ESTABLISHED_AGENCIES[0],
            2016,
            usd_target=12_000_000,
            extra_ids=shared_ids,
        )
        add_grant(
            established[0],
            ESTABLISHED_AGENCIES[3],
            2017,
            usd_target=0,
            missing_amount=True,
        )

    return {
        "grants": grants,
        "by_author": by_author,
        "registry": registry_entries,
        "registry_id_of": registry_id_of,
        "funded_profiles": sorted(a.profile_id for a in picks),
        "new_grantee_profiles": sorted(a.profile_id for a in new_grantees),
    }


# ---------------------------------------------------------------------------
# File output
# ---------------------------------------------------------------------------

OUTPUT_FILES = (
    "corpus.csv",
    "grants.csv",
    "rates.csv",
    "registry.csv",
    "merges.csv",
    "careers.csv",
    "truth.json",
)


def write_outputs(result: SynthResult, out_dir: Path) -> list[Path]:
    """Write every generated artifact; stable content for a fixed spec."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    def write(name: str, data: bytes) -> None:
        path = out_dir / name
        path.write_bytes(data)
        paths.append(path)

    write("corpus.csv", serialize_corpus(result.records, "csv"))
    write("grants.csv", serialize_grants(result.grants))
    write("rates.csv", serialize_rates(result.rates))
    write("registry.csv", serialize_registry(result.registry))
    write("merges.csv", serialize_merges(result.merge_map))
    careers_lines = ["profile_id,year,count"]
    for profile_id in sorted(result.careers):
        for year, count in sorted(result.careers[profile_id].items()):
            careers_lines.append(f"{profile_id},{year},{count}")
    write("careers.csv", ("\r\n".join(careers_lines) + "\r\n").encode("utf-8"))
    write(
        "truth.json",
        (json.dumps(result.truth, indent=2, sort_keys=True) + "\n").encode("utf-8"),
    )
    return paths
