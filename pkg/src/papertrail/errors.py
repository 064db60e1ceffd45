"""Exception hierarchy shared across the toolkit.

Everything raised on bad *data* derives from :class:`PapertrailError` so the
CLI can map it to exit code 1; usage errors stay with click (exit code 2).
"""


class PapertrailError(Exception):
    """Base class for all data-level failures."""


class CorpusRejected(PapertrailError):
    """More than the tolerated share of rows failed to parse."""


class MissingRequiredColumn(PapertrailError):
    """A required header is absent from the input file."""


class NotAnEmail(PapertrailError):
    """String does not look like an email address."""


class ConflictingMerge(PapertrailError):
    """A curated merge map assigns one source ID to two profiles."""


class AllZero(PapertrailError):
    """A profile has no publications in any period."""


class NonPositiveComponent(PapertrailError):
    """Log-ratio transform applied to a composition with a zero part."""


class FewerThanTwoPoints(PapertrailError):
    """Agglomeration needs at least two points."""


class KOutOfRange(PapertrailError):
    """Requested cluster count outside 1..n."""


class SingleCluster(PapertrailError):
    """Silhouette needs at least two clusters."""


class DegenerateData(PapertrailError):
    """Data has no usable spread (all points identical, or zero dispersion)."""


class EmptyCurves(PapertrailError):
    """Model selection called with empty quality curves."""


class EmptyCluster(PapertrailError):
    """A cluster label with no members."""


class NodeNotFound(PapertrailError):
    """Graph metric requested for an unknown node."""


class EmptyCorpus(PapertrailError):
    """Statistic undefined on an empty record list."""


class MissingRate(PapertrailError):
    """No conversion rate for a grant's currency."""


class UnsupportedFormat(PapertrailError):
    """Unknown rendering or parsing format."""


class InvalidSpec(PapertrailError):
    """Synthetic-corpus spec fails its own invariants."""
