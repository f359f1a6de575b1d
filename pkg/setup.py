import os

from setuptools import setup

ext_modules = []
if not os.environ.get("COGSCORE_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            Extension(
                "cogscore.stats._rankcorr",
                ["src/cogscore/stats/_rankcorr.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            ),
            language_level=3,
        )
    except ImportError:
        # No Cython available: the pure-Python kernels are used at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
