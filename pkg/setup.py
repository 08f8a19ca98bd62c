import os

import numpy as np
from setuptools import Extension, setup

_PYX = os.path.join("src", "radargest", "_core.pyx")

ext_modules = []
if os.path.exists(_PYX):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "radargest._core",
                    [_PYX],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    optional=True,
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython available: install the pure-python package; the kernel
        # selector falls back to the numpy implementations at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
