"""Build script for the compiled walk/urn kernels.

The compiled extension is optional: if TSAWLAB_NO_EXT=1 is set (or Cython is
unavailable) the package installs without it and falls back to the pure-Python
kernels at import time.
"""

import os

import numpy
from setuptools import Extension, setup

extensions = []
if os.environ.get("TSAWLAB_NO_EXT", "0") != "1":
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "tsawlab._ckernel",
                ["src/tsawlab/_ckernel.pyx"],
                extra_compile_args=["-O3", "-fno-math-errno", "-march=native"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
