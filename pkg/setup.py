"""Build script: compiles the SMO hot loop as a C extension when possible.

The package works without the extension; flowcast.svr falls back to the
numpy implementation at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if the toolchain allows it, otherwise skip."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, missing Cython, ...
            print(f"warning: skipping C extension build ({exc}); "
                  "pure-python SMO solver will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to compile {ext.name} ({exc}); "
                  "pure-python SMO solver will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("flowcast._smo", ["src/flowcast/_smo.pyx"])],
        language_level=3,
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
