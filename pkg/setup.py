"""Build script: compiles the optional Cython core.

The package works without the extension (a NumPy fallback is selected at
import time), so any failure here downgrades to a pure-Python install
instead of aborting.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"vandalscore: compiled core skipped ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"vandalscore: {ext.name} skipped ({exc})", file=sys.stderr)


ext_modules = []
if not os.environ.get("VANDALSCORE_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [Extension("vandalscore._accel._core", ["src/vandalscore/_accel/_core.pyx"])],
            language_level=3,
        )
    except Exception as exc:
        print(f"vandalscore: Cython unavailable, pure-Python install ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
