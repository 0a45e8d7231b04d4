"""Build script: compiles the Cython stepping core when possible.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile degrades gracefully instead of aborting
the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "sublin._core",
                ["src/sublin/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    sys.stderr.write(
        f"sublin: skipping compiled core ({exc!r}); numpy fallback will be used\n"
    )

setup(ext_modules=ext_modules)
