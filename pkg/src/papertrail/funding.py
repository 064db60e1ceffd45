"""Grant-period classification, currency conversion, and new-grantee detection.

Grants are classified by start year against the same period windows the
clustering uses (boundaries inclusive).  Money never touches binary floats:
amounts are ``Decimal``, each grant's USD equivalent is quantized to the
cent on conversion, and totals are sums of quantized values, so they are
permutation-invariant to the cent.  Rates come from a user-supplied
``rates.csv`` snapshot (units of the currency per USD) for reproducibility.

A *new grantee* is a researcher with no grant starting before the network
window but at least one starting during or after it - the pattern that
turns participation into later funding.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from typing import BinaryIO, Iterable, Optional, Union

from .composition import PeriodWindows
from .corpus import GrantRecord
from .errors import MissingRate, MissingRequiredColumn
from .resolution import ResearcherProfile, source_to_profile

CENT = Decimal("0.01")


class GrantPeriod(enum.Enum):
    BEFORE = "Before"
    DURING = "During"
    AFTER = "After"


@dataclass(frozen=True)
class RatesTable:
    """Currency -> units per USD; USD itself must be 1."""

    rates: dict[str, Decimal]
    as_of: str = ""

    def __post_init__(self):
        for code, rate in self.rates.items():
            if rate <= 0:
                raise ValueError(f"rate for {code} must be positive, got {rate}")
        usd = self.rates.get("USD")
        if usd is None:
            self.rates["USD"] = Decimal(1)
        elif usd != 1:
            raise ValueError(f"USD rate must be 1, got {usd}")

    def to_usd(self, amount: Decimal, currency: str) -> Decimal:
        rate = self.rates.get(currency.upper())
        if rate is None:
            raise MissingRate(f"no conversion rate for currency {currency!r}")
        return (amount / rate).quantize(CENT, rounding=ROUND_HALF_UP)


def parse_rates(source: Union[bytes, BinaryIO]) -> RatesTable:
    """Read ``rates.csv``: columns currency, units_per_usd, as_of."""
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    reader = csv.DictReader(io.TextIOWrapper(source, encoding="utf-8", newline=""))
    if reader.fieldnames is None:
        raise MissingRequiredColumn("empty rates file")
    fields = {f.strip().lower() for f in reader.fieldnames}
    for required in ("currency", "units_per_usd"):
        if required not in fields:
            raise MissingRequiredColumn(f"rates.csv is missing column {required!r}")
    rates: dict[str, Decimal] = {}
    as_of = ""
    for row in reader:
        row = {k.strip().lower(): (v or "") for k, v in row.items() if k}
        rates[row["currency"].strip().upper()] = Decimal(row["units_per_usd"].strip())
        as_of = row.get("as_of", "").strip() or as_of
    return RatesTable(rates=rates, as_of=as_of)


def serialize_rates(table: RatesTable) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["currency", "units_per_usd", "as_of"])
    for code in sorted(table.rates):
        writer.writerow([code, str(table.rates[code]), table.as_of])
    return buf.getvalue().encode("utf-8")


def classify_grant_period(grant: GrantRecord, windows: PeriodWindows) -> GrantPeriod:
    """Before / During / After by start year; window boundaries inclusive."""
    if grant.start_year <= windows.before_end:
        return GrantPeriod.BEFORE
    if grant.start_year <= windows.during_end:
        return GrantPeriod.DURING
    return GrantPeriod.AFTER


@dataclass(frozen=True)
class ResearcherFunding:
    profile_id: str
    canonical_name: str
    before_grants: tuple[str, ...]
    during_after_grants: tuple[str, ...]
    agencies: tuple[str, ...]
    countries: tuple[str, ...]
    usd_total: Decimal

    @property
    def grant_count(self) -> int:
        return len(self.before_grants) + len(self.during_after_grants)


@dataclass(frozen=True, eq=False)
class FundingSummary:
    per_researcher: tuple[ResearcherFunding, ...]
    totals_by_currency: dict[str, Decimal]
    usd_equivalent_total: Decimal
    countries: frozenset[str]
    researchers_per_grant: dict[str, int]
    funded_researcher_count: int
    missing_amount_grants: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "funded_researcher_count": self.funded_researcher_count,
            "usd_equivalent_total": str(self.usd_equivalent_total),
            "totals_by_currency": {
                c: str(v) for c, v in sorted(self.totals_by_currency.items())
            },
            "countries": sorted(self.countries),
            "researchers_per_grant": dict(sorted(self.researchers_per_grant.items())),
            "missing_amount_grants": sorted(self.missing_amount_grants),
            "per_researcher": [
                {
                    "profile_id": r.profile_id,
                    "canonical_name": r.canonical_name,
                    "before_grants": list(r.before_grants),
                    "during_after_grants": list(r.during_after_grants),
                    "agencies": list(r.agencies),
                    "countries": list(r.countries),
                    "usd_total": str(r.usd_total),
                }
                for r in self.per_researcher
            ],
        }


def aggregate_funding(
    grants: Iterable[GrantRecord],
    profiles: Iterable[ResearcherProfile],
    rates: RatesTable,
    windows: Optional[PeriodWindows] = None,
) -> FundingSummary:
    """Per-researcher and corpus-level funding exposure.

    Only grants naming at least one known researcher (by source ID) count.
    Grants with a missing amount still establish funded-researcher status
    but add 0 to totals and are listed in ``missing_amount_grants`` (the
    source does not carry amounts for every grant, so totals are floors).
    """
    windows = windows or PeriodWindows()
    lookup = source_to_profile(profiles)
    by_profile: dict[str, dict] = {}
    totals_by_currency: dict[str, Decimal] = {}
    usd_total = Decimal(0)
    countries: set[str] = set()
    per_grant_count: dict[str, int] = {}
    missing_amount: list[str] = []

    for grant in grants:
        matched = {
            lookup[sid].profile_id for sid in grant.researcher_ids if sid in lookup
        }
        per_grant_count[grant.grant_id] = len(matched)
        if not matched:
            continue
        period = classify_grant_period(grant, windows)
        if grant.amount is None:
            usd_value = Decimal(0)
            missing_amount.append(grant.grant_id)
        else:
            usd_value = rates.to_usd(grant.amount, grant.currency)
            totals_by_currency[grant.currency] = (
                totals_by_currency.get(grant.currency, Decimal(0)) + grant.amount
            )
        usd_total += usd_value
        countries.add(grant.funder_country)
        for profile_id in sorted(matched):
            slot = by_profile.setdefault(
                profile_id,
                {"before": [], "later": [], "agencies": set(), "countries": set(),
                 "usd": Decimal(0)},
            )
            bucket = "before" if period is GrantPeriod.BEFORE else "later"
            slot[bucket].append(grant.grant_id)
            slot["agencies"].add(grant.funder_name)
            slot["countries"].add(grant.funder_country)
            slot["usd"] += usd_value

    per_researcher = []
    names = {p.profile_id: p.canonical_name for p in profiles}
    for profile_id in sorted(by_profile):
        slot = by_profile[profile_id]
        per_researcher.append(
            ResearcherFunding(
                profile_id=profile_id,
                canonical_name=names.get(profile_id, profile_id),
                before_grants=tuple(sorted(slot["before"])),
                during_after_grants=tuple(sorted(slot["later"])),
                agencies=tuple(sorted(slot["agencies"])),
                countries=tuple(sorted(slot["countries"])),
                usd_total=slot["usd"],
            )
        )
    return FundingSummary(
        per_researcher=tuple(per_researcher),
        totals_by_currency=totals_by_currency,
        usd_equivalent_total=usd_total,
        countries=frozenset(countries),
        researchers_per_grant=per_grant_count,
        funded_researcher_count=len(per_researcher),
        missing_amount_grants=tuple(missing_amount),
    )


@dataclass(frozen=True)
class NewGrantee:
    profile_id: str
    canonical_name: str
    agencies: tuple[str, ...]
    countries: tuple[str, ...]
    usd_total: Decimal


def new_grantees(summary: FundingSummary) -> list[NewGrantee]:
    """Researchers with zero pre-window grants and >= 1 during/after grant."""
    out = []
    for r in summary.per_researcher:
        if not r.before_grants and r.during_after_grants:
            out.append(
                NewGrantee(
                    profile_id=r.profile_id,
                    canonical_name=r.canonical_name,
                    agencies=r.agencies,
                    countries=r.countries,
                    usd_total=r.usd_total,
                )
            )
    return out


def researchers_per_grant(
    grants: Iterable[GrantRecord],
    profiles: Iterable[ResearcherProfile],
) -> dict[str, int]:
    """Distinct network-linked researchers named on each grant."""
    lookup = source_to_profile(profiles)
    return {
        g.grant_id: len({lookup[sid].profile_id for sid in g.researcher_ids if sid in lookup})
        for g in grants
    }
