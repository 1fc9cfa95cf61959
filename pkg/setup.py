import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; dwke falls back to the numpy kernel
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("DWKE_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "dwke._ckernel",
                ["src/dwke/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: it would reassociate the compensated sums
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
