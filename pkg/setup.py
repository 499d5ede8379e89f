"""Build script: compiles the hot-loop kernels to a C extension.

The package works without the extension (a pure-Python mirror of the
kernels is selected at import time), so a failed compile only costs
speed. Set STREAMTREE_NO_EXT=1 to skip the build entirely.
"""

import os
import sys

from setuptools import setup


def extensions():
    if os.environ.get("STREAMTREE_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"streamtree: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "streamtree._kernels",
        sources=["src/streamtree/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
