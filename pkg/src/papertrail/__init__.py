"""papertrail: forensic scientometrics for publication-metadata exports.

Library + CLI for screening a metadata corpus for a suspect research
network, consolidating researcher identities, clustering authors by the
temporal composition of their publication activity, and reporting trust,
network, and funding anomalies as machine-readable tables.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
