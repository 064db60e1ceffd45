"""Build hook for the optional compiled clustering kernels.

The package is fully usable without the extension: ``papertrail.kernels``
falls back to a numpy implementation at import time.  The extension only
accelerates the agglomeration / silhouette / dispersion inner loops, so a
failed compile must never fail the install.
"""

import os
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Try to build the speedups; fall back to pure Python on any error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            _warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            _warn(exc)


def _warn(exc):
    warnings.warn(
        "papertrail: compiled kernels could not be built, the pure-Python "
        f"fallback will be used ({exc})"
    )


def _extensions():
    if os.environ.get("PAPERTRAIL_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError as exc:
        _warn(exc)
        return []
    ext = Extension(
        "papertrail._ckernels",
        ["src/papertrail/_ckernels.pyx"],
        # -ffp-contract=off: keep float arithmetic bit-identical with the
        # numpy fallback (no FMA fusion of the Lance-Williams update).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
