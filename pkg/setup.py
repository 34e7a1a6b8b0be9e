"""Build script for the optional GMP-backed selection kernel.

The package is pure Python by default.  When Cython and libgmp are present,
an exact-rational C++ extension is compiled for the equal-shares hot loop;
if anything in that chain is missing the build falls back to the pure
implementation without failing the install.  Set PBRULES_PURE=1 to skip the
extension entirely.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Treat extension build failures as a soft fallback, not an error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler or headers
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "warning: could not build the GMP selection kernel (%s); "
            "falling back to the pure Python engine" % (exc,),
            file=sys.stderr,
        )


def extensions():
    if os.environ.get("PBRULES_PURE") == "1":
        return []
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "pbrules._mes_kernel",
        sources=["src/pbrules/_mes_kernel.pyx"],
        language="c++",
        libraries=["gmp"],
        extra_compile_args=["-O2"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
