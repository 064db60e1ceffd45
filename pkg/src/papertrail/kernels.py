"""Backend selection for the clustering inner loops.

The compiled extension (``papertrail._ckernels``, Cython) is preferred; the
numpy implementation (``papertrail._pykernels``) is the fallback and the
reference for semantics.  Set ``PAPERTRAIL_PURE=1`` to force the fallback
(used by the test suite and the benchmark to exercise both paths).

Both backends implement the same three operations with identical tie-break
and floating-point behavior:

* ``agglomerate(work, method)``      - Lance-Williams merge table
* ``silhouette_samples(dmat, labels, k)``
* ``pooled_within_ss(sq_dmat, labels, k)``
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

WARD, COMPLETE, AVERAGE = (
    _pykernels.WARD,
    _pykernels.COMPLETE,
    _pykernels.AVERAGE,
)

LINKAGE_METHODS = {"ward": WARD, "complete": COMPLETE, "average": AVERAGE}

if os.environ.get("PAPERTRAIL_PURE"):
    _backend = _pykernels
else:
    try:
        from . import _ckernels as _backend  # type: ignore[no-redef]
    except ImportError:
        _backend = _pykernels

BACKEND = _backend.BACKEND_NAME


def get_backend(name: str | None = None):
    """Return a kernel backend module by name ("compiled" or "python")."""
    if name in (None, BACKEND):
        return _backend
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def prepare_work_matrix(dmat: np.ndarray, method: int) -> np.ndarray:
    """Copy a distance matrix into agglomeration working form.

    Ward tracks squared distances internally (heights are reported back on
    the distance scale); the diagonal is set to +inf so self-pairs never win
    the merge scan.
    """
    work = np.ascontiguousarray(dmat, dtype=np.float64).copy()
    if method == WARD:
        work *= work
    np.fill_diagonal(work, np.inf)
    return work


def agglomerate(dmat: np.ndarray, method: int, backend=None) -> np.ndarray:
    """Full linkage: returns the (n-1, 4) merge table (a, b, height, size)."""
    backend = backend or _backend
    work = prepare_work_matrix(dmat, method)
    return np.asarray(backend.agglomerate(work, method))


def silhouette_samples(dmat: np.ndarray, labels: np.ndarray, k: int, backend=None):
    backend = backend or _backend
    return np.asarray(
        backend.silhouette_samples(
            np.ascontiguousarray(dmat, dtype=np.float64),
            np.ascontiguousarray(labels, dtype=np.int64),
            int(k),
        )
    )


def pooled_within_ss(sq_dmat: np.ndarray, labels: np.ndarray, k: int, backend=None) -> float:
    backend = backend or _backend
    return float(
        backend.pooled_within_ss(
            np.ascontiguousarray(sq_dmat, dtype=np.float64),
            np.ascontiguousarray(labels, dtype=np.int64),
            int(k),
        )
    )
