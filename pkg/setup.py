"""Build script for the optional compiled propagation kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); the Cython kernel only accelerates the hot
Monte Carlo propagation loop.
"""

import logging

from setuptools import Extension, setup

log = logging.getLogger("ddmem.setup")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError as exc:
        log.warning("Cython/numpy unavailable (%s); building without the compiled kernel", exc)
        return []
    ext = Extension(
        "ddmem.engine._kernels",
        ["src/ddmem/engine/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
