"""Build script for the optional compiled resampling kernels.

The extension is a pure speed play: ``noisediag._kernels`` falls back to a
numpy implementation with identical (bit-for-bit) results when the compiled
module is unavailable.  Set NOISEDIAG_NO_EXT=1 to skip the build entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("NOISEDIAG_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "noisediag._kernels._speedups",
                    ["src/noisediag/_kernels/_speedups.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
