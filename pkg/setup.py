"""Build script for the compiled kernel core.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and the pure NumPy/SciPy kernels are selected
at import time (see slamkit.kernels).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "slamkit._native",
                sources=["src/slamkit/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
