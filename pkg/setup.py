"""Builds the optional compiled kernel extension.

The package works without it: softsense.backend falls back to the NumPy
kernels when the extension is absent or fails to build.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "softsense.backend._kernels",
                ["src/softsense/backend/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: keep IEEE-basic kernels bitwise equal
                # to the NumPy lane (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
