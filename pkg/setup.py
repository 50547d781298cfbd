import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "treevec.kernels._ckernels",
                ["src/treevec/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
else:
    # No Cython at build time: install pure-Python only, the kernels
    # package falls back to the numpy implementation at import.
    ext_modules = []

setup(ext_modules=ext_modules)
